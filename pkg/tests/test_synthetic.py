import numpy as np
import pytest

from powerplane.synthetic import GenerationStuck, SyntheticSpec, generate_problems


def test_same_seed_same_problems():
    spec = SyntheticSpec(net_count=6, interleave_factor=0.3, rng_seed=11)
    assert generate_problems(spec, 5) == generate_problems(spec, 5)
    assert generate_problems(spec, 3) != generate_problems(SyntheticSpec(net_count=6, rng_seed=12), 3)


def test_shape_of_generated_problems():
    spec = SyntheticSpec(net_count=7, pins_per_net=(2, 4), rng_seed=1)
    for p in generate_problems(spec, 10):
        assert p.m == 7
        assert all(2 <= n.pin_count <= 4 for n in p.nets)
        coords, _ = p.pin_array()
        assert coords.min() >= 0 and coords.max() <= 1


def test_zero_interleave_keeps_nets_compact():
    spec = SyntheticSpec(net_count=5, interleave_factor=0.0, rng_seed=2)
    for p in generate_problems(spec, 10):
        for n in p.nets:
            c = n.coords()
            assert np.ptp(c, axis=0).max() < 0.35


def test_full_interleave_splits_nets():
    spec = SyntheticSpec(net_count=5, pins_per_net=(4, 4), interleave_factor=1.0, rng_seed=3)
    for p in generate_problems(spec, 5):
        for n in p.nets:
            c = n.coords()
            assert np.hypot(*np.ptp(c, axis=0)) >= 0.3


def test_129_problem_sweep():
    total = sum(
        len(generate_problems(SyntheticSpec(net_count=n, interleave_factor=0.3, rng_seed=n), 43))
        for n in (6, 7, 8)
    )
    assert total == 129


def test_impossible_spec_gets_stuck():
    spec = SyntheticSpec(net_count=20, pins_per_net=(5, 5), min_pin_gap=0.3, max_retries=3)
    with pytest.raises(GenerationStuck):
        generate_problems(spec, 1)


def test_bad_spec_rejected():
    with pytest.raises(ValueError):
        SyntheticSpec(net_count=1)
    with pytest.raises(ValueError):
        SyntheticSpec(interleave_factor=2)


def test_zero_interleave_is_trivial_for_mlp_only():
    from powerplane.gomlp import solve_mlp_only

    spec = SyntheticSpec(net_count=5, interleave_factor=0.0, rng_seed=4)
    eis = [solve_mlp_only(p, rng_seed=i).ei for i, p in enumerate(generate_problems(spec, 5))]
    assert eis == [0] * 5
