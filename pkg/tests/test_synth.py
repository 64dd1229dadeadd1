import numpy as np
import pytest

from roman.errors import InfeasibleGeometry
from roman.synth import (
    SynthTaskSpec,
    gen_invariance,
    gen_longrange,
    gen_multiscale,
    gen_position,
    generate,
    instance_rng,
    pattern_distance,
)

GENERATORS = {
    "position": gen_position,
    "longrange": gen_longrange,
    "multiscale": gen_multiscale,
    "invariance": gen_invariance,
}


@pytest.mark.parametrize("family", sorted(GENERATORS))
def test_regeneration_is_bit_identical(family):
    a = GENERATORS[family](seed=7, n_train=40, n_test=20)
    b = GENERATORS[family](seed=7, n_train=40, n_test=20)
    assert np.array_equal(a.train.values, b.train.values)
    assert np.array_equal(a.test.values, b.test.values)
    assert a.train.labels.tolist() == b.train.labels.tolist()


@pytest.mark.parametrize("family", sorted(GENERATORS))
def test_seeds_differ(family):
    a = GENERATORS[family](seed=0, n_train=10, n_test=4)
    b = GENERATORS[family](seed=1, n_train=10, n_test=4)
    assert not np.array_equal(a.train.values, b.train.values)


@pytest.mark.parametrize("family", sorted(GENERATORS))
def test_shapes_balance_and_normalization(family):
    task = GENERATORS[family](seed=0, n_train=51, n_test=25)
    for ds, n in ((task.train, 51), (task.test, 25)):
        assert ds.values.shape == (n, 1, 512)
        counts = np.bincount(ds.labels, minlength=2)
        assert abs(int(counts[0]) - int(counts[1])) <= 1
        for i in range(n):
            assert abs(ds.values[i, 0].mean()) < 1e-9
            assert abs(ds.values[i, 0].std() - 1.0) < 1e-9


def test_instance_stream_isolation():
    # Every (stream, index) pair yields its own reproducible stream.
    a = instance_rng("position", 3, 1, 10).normal(size=4)
    b = instance_rng("position", 3, 1, 10).normal(size=4)
    c = instance_rng("position", 3, 1, 11).normal(size=4)
    d = instance_rng("position", 3, 2, 10).normal(size=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_generate_dispatch():
    task = generate(SynthTaskSpec(family="position", seed=1, n_train=8, n_test=4))
    assert task.train.n_instances == 8
    with pytest.raises(ValueError):
        generate(SynthTaskSpec(family="nope"))


class TestPosition:
    def test_class_ranges_partition(self):
        task = gen_position(seed=0, n_train=200, n_test=100)
        (lo0, hi0), (lo1, hi1) = task.metadata["class_ranges"]
        assert (lo0, hi0) == (32, 72)
        assert (lo1, hi1) == (88, 128)
        for split in ("train", "test"):
            ds = task.train if split == "train" else task.test
            for info, label in zip(task.metadata["instances"][split], ds.labels):
                lo, hi = (lo0, hi0) if label == 0 else (lo1, hi1)
                assert lo <= info["d"] < hi

    def test_noiseless_spikes_at_symmetric_positions(self):
        task = gen_position(seed=0, n_train=60, n_test=30, noise_sigma=0.0,
                            amp_low=4.0, amp_high=4.0)
        for split, ds in (("train", task.train), ("test", task.test)):
            for info, row in zip(task.metadata["instances"][split], ds.values[:, 0]):
                d = info["d"]
                assert set(np.argsort(row)[-2:].tolist()) == {d, 511 - d}
                background = np.delete(row, [d, 511 - d])
                assert np.allclose(background, background[0])

    def test_amplitude_range(self):
        task = gen_position(seed=2, n_train=100, n_test=2)
        amps = [i["amplitude"] for i in task.metadata["instances"]["train"]]
        assert all(4.0 <= a <= 4.5 for a in amps)

    def test_empty_range_raises(self):
        with pytest.raises(InfeasibleGeometry):
            gen_position(gap=200)


class TestLongrange:
    def test_burst_windows_at_sixths(self):
        task = gen_longrange(seed=0, n_train=4, n_test=2)
        assert task.metadata["burst_centers"] == [512 // 6, 5 * 512 // 6]
        assert task.metadata["burst_starts"] == [85 - 16, 426 - 16]

    def test_library_constraints(self):
        task = gen_longrange(seed=0, n_train=4, n_test=2)
        library = [np.array(p) for p in task.metadata["library"]]
        assert len(library) == 3
        for pat in library:
            assert len(pat) == 4
            assert (np.diff(pat) >= 6).all()
            assert pat.min() >= 0 and pat.max() < 33
        for i in range(3):
            for j in range(i + 1, 3):
                assert pattern_distance(library[i], library[j]) >= 6

    def test_label_means_pattern_equality(self):
        task = gen_longrange(seed=1, n_train=80, n_test=40)
        for split, ds in (("train", task.train), ("test", task.test)):
            for info, label in zip(task.metadata["instances"][split], ds.labels):
                first, second = info["patterns"]
                assert (first == second) == (label == 0)

    def test_noiseless_cross_correlation_separates_classes(self):
        task = gen_longrange(seed=0, noise_sigma=0.0, n_train=100, n_test=50)
        s1, s2 = task.metadata["burst_starts"]
        width = task.metadata["burst_len"]
        for ds in (task.train, task.test):
            for row, label in zip(ds.values[:, 0], ds.labels):
                w1, w2 = row[s1:s1 + width], row[s2:s2 + width]
                corr = np.dot(w1, w2) / (np.linalg.norm(w1) * np.linalg.norm(w2))
                assert (corr > 0.999) == (label == 0)

    def test_single_pattern_library_is_infeasible(self):
        with pytest.raises(InfeasibleGeometry):
            gen_longrange(library_size=1)

    def test_spikes_cannot_fit_is_infeasible(self):
        with pytest.raises(InfeasibleGeometry):
            gen_longrange(burst_len=10, n_spikes=4, min_spacing=6)


class TestMultiscale:
    def test_geometry(self):
        task = gen_multiscale(seed=0, n_train=4, n_test=2)
        md = task.metadata
        assert md["mask_start"] == (512 - 96) // 2
        assert md["burst_start"] == (512 - 32) // 2
        assert md["mask_start"] <= md["burst_start"]
        assert md["burst_start"] + md["burst_len"] <= md["mask_start"] + md["mask_len"]

    def test_default_sizes(self):
        task = gen_multiscale(seed=0)
        assert task.train.values.shape == (500, 1, 512)
        assert task.test.values.shape == (250, 1, 512)

    def test_label_is_phase_agreement(self):
        task = gen_multiscale(seed=1, n_train=60, n_test=30)
        for split, ds in (("train", task.train), ("test", task.test)):
            for info, label in zip(task.metadata["instances"][split], ds.labels):
                assert (info["coarse_phase"] == info["fine_phase"]) == (label == 0)

    def test_noiseless_phase_oracle_agrees_everywhere(self):
        task = gen_multiscale(seed=0, noise_sigma=0.0, n_train=100, n_test=50)
        md = task.metadata
        length, mask = md["length"], np.ones(md["length"], dtype=bool)
        mask[md["mask_start"]:md["mask_start"] + md["mask_len"]] = False
        t = np.arange(length)
        tb = np.arange(md["burst_len"])
        coarse = [np.cos(2 * np.pi * md["coarse_cycles"] * t / length + ph)[mask]
                  for ph in md["phases"]]
        fine = [np.cos(2 * np.pi * md["fine_cycles"] * tb / md["burst_len"] + ph)
                for ph in md["phases"]]
        for ds in (task.train, task.test):
            for row, label in zip(ds.values[:, 0], ds.labels):
                outer = row[mask] - row[mask].mean()
                k_coarse = int(np.argmax([np.dot(outer, c - c.mean()) for c in coarse]))
                burst = row[md["burst_start"]:md["burst_start"] + md["burst_len"]]
                burst = burst - burst.mean()
                k_fine = int(np.argmax([np.dot(burst, f - f.mean()) for f in fine]))
                assert ((k_coarse == k_fine) == (label == 0))

    def test_burst_outside_mask_is_infeasible(self):
        with pytest.raises(InfeasibleGeometry):
            gen_multiscale(burst_len=128, mask_len=96)


class TestInvariance:
    def test_every_series_has_two_instances_with_separation(self):
        task = gen_invariance(seed=0, n_train=200, n_test=100)
        for split in ("train", "test"):
            for info in task.metadata["instances"][split]:
                starts = info["starts"]
                assert len(starts) == 2
                assert abs(starts[0] - starts[1]) >= 16

    def test_target_only_in_positives(self):
        task = gen_invariance(seed=0, n_train=60, n_test=30)
        for split, ds in (("train", task.train), ("test", task.test)):
            for info, label in zip(task.metadata["instances"][split], ds.labels):
                assert (info["target_slot"] >= 0) == (label == 1)

    def test_pattern_library_distances(self):
        task = gen_invariance(seed=0, n_train=4, n_test=2)
        pats = [np.array(task.metadata["target_pattern"])]
        pats += [np.array(p) for p in task.metadata["distractor_library"]]
        assert len(pats) == 3
        for i in range(len(pats)):
            assert (np.diff(pats[i]) >= 3).all()
            for j in range(i + 1, len(pats)):
                assert pattern_distance(pats[i], pats[j]) >= 6

    def test_noiseless_matched_filter_peaks_at_planted_start(self):
        task = gen_invariance(seed=0, noise_sigma=0.0, n_train=100, n_test=50)
        target = np.array(task.metadata["target_pattern"])
        width = task.metadata["motif_len"]
        for split, ds in (("train", task.train), ("test", task.test)):
            infos = task.metadata["instances"][split]
            for info, row, label in zip(infos, ds.values[:, 0], ds.labels):
                if label != 1:
                    continue
                scores = [row[s + target].sum() for s in range(len(row) - width + 1)]
                planted = info["starts"][info["target_slot"]]
                assert int(np.argmax(scores)) == planted

    def test_impossible_separation_is_infeasible(self):
        with pytest.raises(InfeasibleGeometry):
            gen_invariance(distractors_per_series=30, min_separation=100)
