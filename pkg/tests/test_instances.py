import json

import numpy as np
import pytest

from mixsyn import (
    AssumptionError,
    ParseError,
    beta_star,
    generate_instance,
    is_feasible,
    load_instance,
    problem_from_dict,
    problem_to_dict,
    sample_feasible_policies,
    save_instance,
    solve_analytic_1ch,
)


def test_load_instance0():
    p = load_instance("instance0")
    assert (p.n, p.m, p.p) == (3, 3, 3)
    assert p.beta == 6.0
    assert not p.single_channel
    assert np.allclose(p.W, 25 * np.eye(3))


def test_load_instance0_single_channel_variant():
    p = load_instance("instance0", single_channel=True)
    assert p.single_channel
    assert np.allclose(p.Q2, np.eye(3))


def test_load_example3_scalar():
    p = load_instance("example3")
    assert (p.n, p.m, p.p) == (1, 1, 1)


def test_load_unknown_name():
    with pytest.raises(ParseError, match="no such instance"):
        load_instance("nonexistent_instance_xyz")


def test_load_rejects_singular_w(tmp_path):
    d = problem_to_dict(load_instance("example1"))
    d["Bw"] = [1.0, 0.0, 0.0, 0.0]  # rank-1 disturbance input
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(AssumptionError, match="Assumption 2") as exc:
        load_instance(path)
    assert "W not positive definite" in str(exc.value)


def test_load_rejects_unstabilizable(tmp_path):
    d = {
        "name": "bad", "n": 1, "m": 1, "p": 1,
        "A": [1.0], "B": [0.0], "Bw": [1.0],
        "Q2": [1.0], "R2": [1.0], "Qinf": [1.0], "Rinf": [1.0], "beta": 1.0,
    }
    path = tmp_path / "bad2.json"
    path.write_text(json.dumps(d))
    with pytest.raises(AssumptionError, match="Assumption 1"):
        load_instance(path)


def test_parse_error_missing_field(tmp_path):
    path = tmp_path / "missing.json"
    path.write_text(json.dumps({"n": 1, "m": 1, "p": 1, "beta": 1.0}))
    with pytest.raises(ParseError, match="missing field 'A'"):
        load_instance(path)


def test_parse_error_wrong_length(tmp_path):
    d = problem_to_dict(load_instance("example3"))
    d["A"] = [1.0, 2.0]
    path = tmp_path / "short.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ParseError, match="'A'"):
        load_instance(path)


def test_parse_error_bad_json(tmp_path):
    path = tmp_path / "corrupt.json"
    path.write_text("{not json")
    with pytest.raises(ParseError, match="parse error"):
        load_instance(path)


def test_single_channel_flag_mismatch(tmp_path):
    d = problem_to_dict(load_instance("instance0"))
    d["single_channel"] = True
    path = tmp_path / "mismatch.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ParseError, match="single_channel"):
        load_instance(path)


def test_dict_round_trip():
    p = load_instance("instance0")
    q = problem_from_dict(problem_to_dict(p))
    for attr in ("A", "B", "Bw", "Q2", "R2", "Qinf", "Rinf"):
        assert np.array_equal(getattr(p, attr), getattr(q, attr))
    assert p.beta == q.beta


def test_save_and_reload(tmp_path):
    p = generate_instance(4, 2, seed=42)
    path = save_instance(p, tmp_path / "gen.json")
    q = load_instance(path)
    assert np.array_equal(p.A, q.A)
    assert q.beta == p.beta


def test_generate_scalar_pipeline():
    p = generate_instance(1, 1, seed=3)
    K, _ = solve_analytic_1ch(p)
    assert is_feasible(p, K).feasible


def test_generate_feasible_margin():
    p = generate_instance(6, 3, seed=4)
    assert p.single_channel
    assert beta_star(p, tol=1e-3) < p.beta
    starts = sample_feasible_policies(p, 2, seed=0)
    assert all(is_feasible(p, K).feasible for K in starts)


def test_generate_two_channel():
    p = generate_instance(3, 2, seed=5, two_channel=True)
    assert not p.single_channel
    assert np.allclose(p.Rinf, 4 * p.R2)


def test_beta_override():
    p = load_instance("instance0", beta=14.0)
    assert p.beta == 14.0


def test_check_assumptions_flags_tight_beta():
    with pytest.raises(AssumptionError, match="Assumption 1"):
        load_instance("instance0", beta=5.0, check_assumptions=True)


def test_check_assumptions_passes_instance0():
    p = load_instance("instance0", check_assumptions=True)
    assert p.beta == 6.0
