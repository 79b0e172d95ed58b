import json

import pytest

from monosplit.cli import (EXIT_DIVERGED, EXIT_INVALID, EXIT_MAX_ITERS,
                           SpecValidationError, emit_csv, main, parse_spec,
                           run)


def fdr_spec(**over):
    spec = {
        "schema_version": 1,
        "algorithm": "fdr",
        "dim": 2,
        "gamma": 1.0,
        "subspace": {"kind": "span", "vector": [1, 1]},
        "A": {"kind": "box", "lo": [1, 1], "hi": [2, 2]},
        "B": {"kind": "identity"},
        "lambda": {"kind": "constant", "value": 1.0},
        "stop": {"tol": 1e-9, "max_iters": 5000},
        "seed": 0,
    }
    spec.update(over)
    return spec


def write_spec(tmp_path, spec, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(spec))
    return p


def test_parse_minimal_fdr_accepted():
    spec = parse_spec(json.dumps(fdr_spec()))
    assert spec.algorithm == "fdr"
    assert spec.tol == 1e-9


def test_parse_rejects_gamma_at_boundary():
    with pytest.raises(SpecValidationError) as e:
        parse_spec(json.dumps(fdr_spec(gamma=2.0)))
    assert any("]0, 2*beta[" in msg for msg in e.value.errors)


def test_parse_rejects_dr2_relaxation():
    spec = {"schema_version": 1, "algorithm": "dr2", "dim": 1,
            "A1": {"kind": "zero"}, "A2": {"kind": "zero"},
            "lambda": {"kind": "constant", "value": 1.6}}
    with pytest.raises(SpecValidationError) as e:
        parse_spec(json.dumps(spec))
    assert any("]0, 3/2[" in msg for msg in e.value.errors)


def test_parse_rejects_unknown_operator():
    with pytest.raises(SpecValidationError) as e:
        parse_spec(json.dumps(fdr_spec(A={"kind": "frobnicate"})))
    assert any("unknown operator kind" in msg for msg in e.value.errors)


def test_parse_collects_all_errors():
    bad = fdr_spec(A={"kind": "frobnicate"}, gamma=5.0,
                   subspace={"kind": "mystery"})
    with pytest.raises(SpecValidationError) as e:
        parse_spec(json.dumps(bad))
    joined = "\n".join(e.value.errors)
    assert "unknown operator kind" in joined
    assert "]0, 2*beta[" in joined
    assert "unknown subspace kind" in joined


def test_parse_rejects_unknown_algorithm():
    with pytest.raises(SpecValidationError) as e:
        parse_spec(json.dumps({"schema_version": 1, "algorithm": "magic"}))
    assert any("unknown algorithm" in msg for msg in e.value.errors)


def test_parse_rejects_invalid_json():
    with pytest.raises(SpecValidationError, match="invalid JSON"):
        parse_spec("{not json")


def test_parse_rejects_wrong_schema_version():
    with pytest.raises(SpecValidationError) as e:
        parse_spec(json.dumps(fdr_spec(schema_version=7)))
    assert any("schema_version" in msg for msg in e.value.errors)


def test_parse_rejects_infeasible_fpi_init():
    spec = {
        "schema_version": 1, "algorithm": "fpi-explicit", "dim": 2,
        "gamma": 1.0,
        "subspace": {"kind": "span", "vector": [1, 1]},
        "A": {"kind": "abs"},
        "B": {"kind": "identity"},
        "init": {"kind": "value", "x": [1.0, 0.0], "y": [1.0, 1.0]},
    }
    with pytest.raises(SpecValidationError) as e:
        parse_spec(json.dumps(spec))
    joined = "\n".join(e.value.errors)
    assert "init.x: must lie in the subspace" in joined
    assert "init.y" in joined


def test_parse_rejects_nonsummable_errors():
    spec = fdr_spec(errors={"a": {"kind": "harmonic", "magnitude": 1.0}})
    with pytest.raises(SpecValidationError) as e:
        parse_spec(json.dumps(spec))
    assert any("non-summable" in msg for msg in e.value.errors)


def test_run_converged_and_csv(tmp_path):
    record = run(parse_spec(json.dumps(fdr_spec())))
    assert record.summary["status"] == "converged"
    assert record.rows[-1].residual <= 1e-9
    out = tmp_path / "run.csv"
    emit_csv(record, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "n,lambda,residual,dx,dy,objective"
    assert len(lines) == len(record.rows) + 1
    final_residual = float(lines[-1].split(",")[2])
    assert final_residual <= 1e-9


def test_run_row_count_bounded():
    spec = fdr_spec(stop={"tol": -1.0, "max_iters": 17})
    record = run(parse_spec(json.dumps(spec)))
    assert len(record.rows) <= 18
    assert record.summary["status"] == "max-iters"


def test_run_max_iters_zero_single_row():
    spec = fdr_spec(stop={"tol": 1e-9, "max_iters": 0},
                    init={"kind": "value", "z": [9.0, 9.0]})
    record = run(parse_spec(json.dumps(spec)))
    assert record.summary["status"] == "max-iters"
    assert len(record.rows) == 1
    assert record.rows[0].n == 0


def test_run_divergence_keeps_partial_history(tmp_path):
    spec = fdr_spec(A={"kind": "unstable", "factor": 1e80},
                    B={"kind": "zero", "beta": 1.0},
                    subspace={"kind": "identity"},
                    init={"kind": "value", "z": [1.0, 1.0]},
                    stop={"tol": 1e-9, "max_iters": 50})
    record = run(parse_spec(json.dumps(spec)))
    assert record.summary["status"] == "diverged"
    assert len(record.rows) >= 1
    out = tmp_path / "partial.csv"
    emit_csv(record, out)
    assert len(out.read_text().splitlines()) == len(record.rows) + 1


def test_cli_exit_codes(tmp_path, capsys):
    ok = write_spec(tmp_path, fdr_spec(), "ok.json")
    assert main([str(ok), "-o", str(tmp_path / "ok.csv")]) == 0

    stalled = write_spec(tmp_path, fdr_spec(stop={"tol": -1.0, "max_iters": 5}),
                         "stalled.json")
    assert main([str(stalled), "-o", str(tmp_path / "s.csv")]) == EXIT_MAX_ITERS

    diverging = write_spec(tmp_path, fdr_spec(
        A={"kind": "unstable", "factor": 1e80},
        B={"kind": "zero", "beta": 1.0},
        subspace={"kind": "identity"},
        init={"kind": "value", "z": [1.0, 1.0]}), "div.json")
    assert main([str(diverging), "-o", str(tmp_path / "d.csv")]) == EXIT_DIVERGED

    invalid = write_spec(tmp_path, fdr_spec(gamma=2.0), "bad.json")
    assert main([str(invalid)]) == EXIT_INVALID
    err = capsys.readouterr().err
    assert "]0, 2*beta[" in err

    missing = tmp_path / "nope.json"
    assert main([str(missing)]) == EXIT_INVALID


def test_cli_rejection_messages_cite_ranges(tmp_path, capsys):
    dr2 = write_spec(tmp_path, {
        "schema_version": 1, "algorithm": "dr2", "dim": 1,
        "A1": {"kind": "zero"}, "A2": {"kind": "zero"},
        "lambda": {"kind": "constant", "value": 1.6}}, "dr2.json")
    assert main([str(dr2)]) == EXIT_INVALID
    assert "]0, 3/2[" in capsys.readouterr().err

    unknown = write_spec(tmp_path, fdr_spec(A={"kind": "wat"}), "unk.json")
    assert main([str(unknown)]) == EXIT_INVALID
    assert "unknown operator kind" in capsys.readouterr().err


def test_cli_determinism_byte_identical(tmp_path):
    spec = write_spec(tmp_path, fdr_spec(init={"kind": "random", "scale": 2.0},
                                         seed=7), "det.json")
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main([str(spec), "-o", str(out1)]) == 0
    assert main([str(spec), "-o", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_cli_seed_changes_random_init(tmp_path):
    spec = fdr_spec(init={"kind": "random", "scale": 2.0},
                    stop={"tol": -1.0, "max_iters": 3})
    p = write_spec(tmp_path, spec, "seed.json")
    out1, out2 = tmp_path / "s0.csv", tmp_path / "s1.csv"
    main([str(p), "-o", str(out1), "--seed", "0"])
    main([str(p), "-o", str(out2), "--seed", "1"])
    assert out1.read_bytes() != out2.read_bytes()


def test_cli_overrides(tmp_path):
    p = write_spec(tmp_path, fdr_spec(), "ovr.json")
    out = tmp_path / "ovr.csv"
    code = main([str(p), "-o", str(out), "--max-iters", "0", "--tol", "1e-12"])
    assert code == EXIT_MAX_ITERS
    lines = out.read_text().splitlines()
    assert len(lines) == 2  # header + initial row


def test_cli_log_every_thins_history(tmp_path):
    p = write_spec(tmp_path, fdr_spec(stop={"tol": -1.0, "max_iters": 10}),
                   "thin.json")
    out = tmp_path / "thin.csv"
    main([str(p), "-o", str(out), "--log-every", "4"])
    ns = [int(line.split(",")[0]) for line in out.read_text().splitlines()[1:]]
    assert ns == [0, 4, 8, 10]


def test_cli_multiple_specs_and_jobs(tmp_path):
    p1 = write_spec(tmp_path, fdr_spec(), "one.json")
    p2 = write_spec(tmp_path, fdr_spec(seed=3), "two.json")
    outdir = tmp_path / "outs"
    code = main([str(p1), str(p2), "-o", str(outdir), "--jobs", "2"])
    assert code == 0
    assert (outdir / "one.csv").exists()
    assert (outdir / "two.csv").exists()


def test_emit_csv_path_context(tmp_path):
    record = run(parse_spec(json.dumps(fdr_spec())))
    target = tmp_path / "missing_dir" / "x.csv"
    with pytest.raises(OSError, match="cannot write CSV"):
        emit_csv(record, target)


def test_variational_spec_records_objective(tmp_path):
    spec = {
        "schema_version": 1,
        "algorithm": "variational",
        "dim": 2,
        "gamma": 1.0,
        "subspace": {"kind": "zero_mean"},
        "f": {"kind": "l1"},
        "g": {"kind": "quadratic", "Q": [[1, 0], [0, 1]], "b": [3, -3]},
        "stop": {"tol": 1e-10, "max_iters": 5000},
    }
    record = run(parse_spec(json.dumps(spec)))
    assert record.summary["status"] == "converged"
    assert record.rows[-1].objective is not None
    out = tmp_path / "var.csv"
    emit_csv(record, out)
    last = out.read_text().splitlines()[-1].split(",")
    assert last[5] != ""


def test_shipped_sample_specs_run(tmp_path):
    from pathlib import Path
    spec_dir = Path(__file__).resolve().parent.parent / "specs"
    paths = sorted(spec_dir.glob("*.json"))
    assert len(paths) >= 3
    for p in paths:
        out = tmp_path / (p.stem + ".csv")
        assert main([str(p), "-o", str(out)]) == 0, p.name
        assert float(out.read_text().splitlines()[-1].split(",")[2]) <= 1e-9


def test_all_algorithms_run_end_to_end(tmp_path):
    specs = {
        "fdr": fdr_spec(),
        "fpi": {
            "schema_version": 1, "algorithm": "fpi", "dim": 2, "gamma": 1.0,
            "subspace": {"kind": "span", "vector": [1, 1]},
            "A": {"kind": "box", "lo": [1, 1], "hi": [2, 2]},
            "B": {"kind": "identity"},
            "delta": {"kind": "constant", "value": 1.0},
        },
        "fpi-explicit": {
            "schema_version": 1, "algorithm": "fpi-explicit", "dim": 2,
            "gamma": 1.0,
            "subspace": {"kind": "zero_mean"},
            "A": {"kind": "abs"},
            "B": {"kind": "identity"},
        },
        "km": {
            "schema_version": 1, "algorithm": "km", "dim": 2,
            "ops": [{"type": "projector", "kind": "span", "vector": [1, 1]},
                    {"type": "projector", "kind": "span", "vector": [1, 0]}],
            "init": {"kind": "value", "z": [0.0, 2.0]},
        },
        "product": {
            "schema_version": 1, "algorithm": "product", "dim": 1,
            "gamma": 1.0,
            "blocks": [{"kind": "abs", "center": [0.0]},
                       {"kind": "abs", "center": [1.0]},
                       {"kind": "abs", "center": [2.0]}],
            "B": {"kind": "zero", "beta": 1.0},
        },
        "pi-sum": {
            "schema_version": 1, "algorithm": "pi-sum", "dim": 1,
            "gamma": 1.0,
            "blocks": [{"kind": "abs", "center": [0.0]},
                       {"kind": "abs", "center": [1.0]},
                       {"kind": "abs", "center": [2.0]}],
            "B": {"kind": "zero", "beta": 1.0},
        },
        "dr2": {
            "schema_version": 1, "algorithm": "dr2", "dim": 1, "gamma": 1.0,
            "A1": {"kind": "linear", "M": [[1.0]], "b": [-4.0]},
            "A2": {"kind": "linear", "M": [[1.0]], "b": [2.0]},
        },
        "variational": {
            "schema_version": 1, "algorithm": "variational", "dim": 2,
            "subspace": {"kind": "zero_mean"},
            "f": {"kind": "l1"},
            "g": {"kind": "quadratic", "Q": [[1, 0], [0, 1]], "b": [3, -3]},
        },
    }
    for name, spec in specs.items():
        p = write_spec(tmp_path, spec, f"{name}.json")
        out = tmp_path / f"{name}.csv"
        code = main([str(p), "-o", str(out)])
        assert code == 0, name
        assert out.exists(), name
        final = out.read_text().splitlines()[-1].split(",")
        assert float(final[2]) <= 1e-8, name
