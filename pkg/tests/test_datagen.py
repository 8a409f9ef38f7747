import warnings

import numpy as np
import pytest

from dial.data import ExampleSet, PreferenceSet, read_jsonl, truth_pairs, write_jsonl
from dial.datagen import (MOON_CENTER, gen_gaussian_pair, gen_odd_one_out, gen_two_moons, moon_points, rotate,
                          scores_to_preferences, spurious_rule_rewards)
from dial.evaluation import pair_accuracy, top1_accuracy_from_rewards
from dial.oracle import w1_exact_1d, w1_exact_assignment


# ---------------------------------------------------------------- two moons

def test_noiseless_unshifted_moons_have_zero_w1():
    src, tgt, _ = gen_two_moons(40, 40, "rotate", noise_sd=0.0, seed=1, angle=0.0)
    assert w1_exact_assignment(src.examples.y, tgt.examples.y) == pytest.approx(0.0, abs=1e-12)


def test_half_turn_swaps_moons():
    t = np.linspace(0, np.pi, 50)
    upper = moon_points(t, np.zeros(50, int))
    lower = moon_points(t, np.ones(50, int))
    np.testing.assert_allclose(rotate(upper, 180.0), lower, atol=1e-12)
    np.testing.assert_allclose(rotate(lower, 180.0, MOON_CENTER), upper, atol=1e-12)


def test_fewshot_covers_only_the_arc():
    src, tgt, f = gen_two_moons(50, 500, "fewshot", noise_sd=0.0, seed=3, arc_fraction=0.4, arc_start=0.0)
    y, m = src.examples.y, src.examples.f
    t0 = np.arctan2(y[m == 0, 1], y[m == 0, 0])
    assert np.all((t0 >= -1e-12) & (t0 <= 0.4 * np.pi + 1e-12))
    assert len(src.preferences) == 25 and len(tgt.examples) == 500
    assert src.preferences.x_dim == 0 and src.preferences.k == 1


def test_moons_preferences_consistent_with_scorer():
    src, tgt, f = gen_two_moons(60, 200, "fewshot", noise_sd=0.05, seed=4)
    p = src.preferences
    assert pair_accuracy(f(p.x, p.y_pos), f(p.x, p.y_neg[:, 0])) == 1.0
    # scorer agrees with the generating labels on the target, up to the noisy overlap
    assert np.mean(f(tgt.examples.x, tgt.examples.y) == tgt.examples.f) > 0.97


def test_moons_validation():
    with pytest.raises(ValueError):
        gen_two_moons(2, 50)
    with pytest.raises(ValueError):
        gen_two_moons(50, 50, "spiral")


def test_moons_deterministic_jsonl(tmp_path):
    paths = []
    for k in range(2):
        src, tgt, _ = gen_two_moons(500, 500, "fewshot", seed=7)
        path = tmp_path / f"run{k}.jsonl"
        write_jsonl(path, src.preferences.to_records() + tgt.examples.to_records(with_f=True))
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


# ---------------------------------------------------------------- odd one out

def test_odd_one_out_structure_and_scorer():
    src, tgt, f = gen_odd_one_out(5, 50, 0, 1, n=40, seed=2)
    p = src.preferences
    assert p.k == 4 and p.x_dim == 40 and p.y_dim == 8
    # the odd item is one of the five items in the context
    items = p.x.reshape(40, 5, 8)
    assert all(any(np.array_equal(items[i, j], p.y_pos[i]) for j in range(5)) for i in range(40))
    assert np.array_equal(f(tgt.examples.x, tgt.examples.y), tgt.examples.f)
    chosen = p.chosen_inputs()
    rej = p.rejected_inputs()
    assert np.all(f(chosen[:, :40], chosen[:, 40:]) == 1.0)
    assert np.all(f(rej.reshape(-1, 48)[:, :40], rej.reshape(-1, 48)[:, 40:]) == 0.0)


def test_random_top1_is_one_in_five():
    _, tgt, _ = gen_odd_one_out(5, 100, 0, 1, n=2000, seed=5)
    rng = np.random.default_rng(0)
    accs = [top1_accuracy_from_rewards(rng.standard_normal(len(tgt.examples)), tgt.examples) for _ in range(5)]
    assert np.mean(accs) == pytest.approx(0.2, abs=0.015)


def test_centroid_rule_is_perfect_at_small_sd():
    _, tgt, f = gen_odd_one_out(5, 100, 0, 3, n=200, seed=6, sd=1e-6)
    r = f(tgt.examples.x, tgt.examples.y)
    assert top1_accuracy_from_rewards(r, tgt.examples) == 1.0


def test_spurious_rule_is_a_trap():
    src, tgt, _ = gen_odd_one_out(5, 100, 0, 1, n=2000, seed=8, sd=1e-3)
    r_src = spurious_rule_rewards(src.examples, avoid_cat=0, categories=5)
    r_tgt = spurious_rule_rewards(tgt.examples, avoid_cat=0, categories=5)
    assert top1_accuracy_from_rewards(r_src, src.examples) == 1.0
    assert top1_accuracy_from_rewards(r_tgt, tgt.examples) <= 0.25


def test_odd_one_out_reproducible():
    a = gen_odd_one_out(n=30, seed=11)[0].preferences
    b = gen_odd_one_out(n=30, seed=11)[0].preferences
    assert np.array_equal(a.y_pos, b.y_pos) and np.array_equal(a.x, b.x)


def test_odd_one_out_validation():
    with pytest.raises(ValueError):
        gen_odd_one_out(1)
    with pytest.raises(ValueError):
        gen_odd_one_out(src_base_cat=2, tgt_base_cat=2)


# ---------------------------------------------------------------- gaussians

def test_gaussian_pair_paired_zero_shift():
    a, b = gen_gaussian_pair(3, 0.0, 50, seed=1, paired=True)
    assert w1_exact_assignment(a, b) == 0.0


def test_gaussian_pair_1d_shift():
    a, b = gen_gaussian_pair(1, 3.0, 4096, seed=2)
    assert abs(w1_exact_1d(a, b) - 3.0) <= 0.1


def test_gaussian_pair_shapes():
    a, b = gen_gaussian_pair(2, [1.0, -1.0], 10, seed=0)
    assert a.shape == b.shape == (10, 2)
    with pytest.raises(ValueError):
        gen_gaussian_pair(0, 1.0, 10)


# ---------------------------------------------------------------- score levels

def scored(levels, contexts=None):
    n = len(levels)
    x = np.zeros((n, 0)) if contexts is None else np.asarray(contexts, float).reshape(n, -1)
    return ExampleSet(x, np.arange(n, dtype=float)[:, None], np.asarray(levels, float))


def test_two_levels_one_triple():
    p = scores_to_preferences(scored([1, 2]))
    assert len(p) == 1 and p.y_pos[0, 0] == 1.0 and p.y_neg[0, 0, 0] == 0.0


def test_adjacent_levels_only():
    p = scores_to_preferences(scored([1, 2, 3]))
    pairs = sorted((int(a), int(b)) for a, b in zip(p.y_pos[:, 0], p.y_neg[:, 0, 0]))
    assert pairs == [(1, 0), (2, 1)]


def test_every_example_chosen_when_possible():
    rng = np.random.default_rng(0)
    levels = rng.integers(1, 6, size=300)
    levels[levels == 3] = 4  # a gap: level 4 has no adjacent lower level
    ex = scored(levels)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        p = scores_to_preferences(ex, seed=1)
    assert any("no adjacent lower level" in str(w.message) for w in caught)
    chosen = set(p.y_pos[:, 0].astype(int))
    for i, lv in enumerate(levels):
        if (levels == lv - 1).any():
            assert i in chosen
        else:
            assert i not in chosen
    assert all(levels[int(a)] == levels[int(b)] + 1 for a, b in zip(p.y_pos[:, 0], p.y_neg[:, 0, 0]))


def test_score_pairs_respect_context():
    ex = scored([1, 2, 1, 2], contexts=[[0], [0], [1], [1]])
    p = scores_to_preferences(ex)
    assert len(p) == 2
    assert all(p.x[i, 0] == ex.x[int(p.y_pos[i, 0]), 0] == ex.x[int(p.y_neg[i, 0, 0]), 0] for i in range(2))


# ---------------------------------------------------------------- jsonl round trip

def test_jsonl_round_trip(tmp_path):
    src, tgt, _ = gen_odd_one_out(n=5, seed=1)
    write_jsonl(tmp_path / "p.jsonl", src.preferences.to_records())
    back = PreferenceSet.from_records(read_jsonl(tmp_path / "p.jsonl"))
    assert back.y_neg.tobytes() == src.preferences.y_neg.tobytes()
    text = (tmp_path / "p.jsonl").read_bytes()
    assert b"\r" not in text and text.endswith(b"\n")
    write_jsonl(tmp_path / "t.jsonl", tgt.examples.to_records(with_f=True))
    ex = ExampleSet.from_records(read_jsonl(tmp_path / "t.jsonl"))
    assert np.array_equal(ex.f, tgt.examples.f)
    w, l = truth_pairs(ex)
    assert len(w) == 5 * 4
