import csv
import json
import subprocess
import sys

import pytest

from jumpput import cli
from jumpput.exceptions import ConfigError, InvariantViolated
from jumpput.oracles import merton_european_put

K = 100.0


def merton_config(out_dir, **extra):
    cfg = {
        "model": {"r": 0.05, "sigma": 0.2, "lambda": 0.3, "K": K, "T0": 0.5,
                  "jump": {"kind": "lognormal", "m": -0.045, "s": 0.3}},
        "grid": {"M": 120, "N": 40},
        "oracles": [{"kind": "merton_european", "spots": [80, 100, 120]},
                    {"kind": "lsmc", "paths": 20000, "steps": 50, "seed": 5}],
        "output_dir": str(out_dir),
    }
    cfg.update(extra)
    return cfg


def bs_config(out_dir):
    return {
        "model": {"r": 0.05, "sigma": 0.2, "lambda": 0.0, "K": K, "T0": 1.0},
        "grid": {"M": 100, "N": 50},
        "oracles": [{"kind": "binomial", "spots": [100], "steps": 500}],
        "output_dir": str(out_dir),
    }


def write(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_missing_sigma_exit_1(tmp_path, capsys):
    # [TRIVIAL]
    cfg = merton_config(tmp_path / "out")
    del cfg["model"]["sigma"]
    assert cli.main(["run", write(tmp_path, cfg)]) == 1
    assert "model.sigma" in capsys.readouterr().err


@pytest.mark.parametrize("mutate, path", [
    (lambda c: c["model"].update(foo=1), "model.foo"),
    (lambda c: c["grid"].update(Mx=1), "grid.Mx"),
    (lambda c: c.update(extra=1), "extra"),
    (lambda c: c["model"].update(sigma=-0.2), "model.sigma"),
    (lambda c: c["model"].update(sigma="high"), "model.sigma"),
    (lambda c: c["model"].update(r=-0.01), "model.r"),
    (lambda c: c["model"]["jump"].update(s=-1), "model.jump"),
    (lambda c: c["oracles"][0].update(kind="heston"), "oracles[0].kind"),
    (lambda c: c["oracles"][1].update(paths=1), "oracles[1]"),
    (lambda c: c.update(iteration={"tol": 0}), "iteration.tol"),
    (lambda c: c.update(solver={"theta": 2.0}), "solver"),
    (lambda c: c.update(grid={"M": 4}), "grid"),
])
def test_config_errors_name_the_field(tmp_path, capsys, mutate, path):
    cfg = merton_config(tmp_path / "out")
    mutate(cfg)
    assert cli.main(["run", write(tmp_path, cfg)]) == 1
    assert path in capsys.readouterr().err


def test_binomial_with_jumps_rejected():
    cfg = merton_config("out")
    cfg["oracles"] = [{"kind": "binomial"}]
    with pytest.raises(ConfigError) as err:
        cli.parse_config(cfg)
    assert err.value.path == "oracles[0].kind"


def test_unreadable_config(tmp_path):
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", str(bad)]) == 1


def test_lambda_zero_one_iteration(tmp_path):
    # [TRIVIAL]
    out = tmp_path / "out"
    assert cli.main(["run", write(tmp_path, bs_config(out))]) == 0
    conv = json.loads((out / "convergence.json").read_text())
    assert len(conv) == 1 and conv[0]["n"] == 1
    quotes = json.loads((out / "oracle_quotes.json").read_text())
    assert quotes[0]["method"] == "binomial_crr"


def test_merton_outputs(tmp_path):
    # [DERIVED] N boundary rows, c strictly inside (0, K)
    out = tmp_path / "out"
    cfg = merton_config(out)
    assert cli.main(["run", write(tmp_path, cfg)]) == 0
    with open(out / "boundary.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["T", "c", "fit_slope"]
    assert len(rows) - 1 == cfg["grid"]["N"]
    assert all(0 < float(r[1]) < K for r in rows[1:])
    with open(out / "value_surface.csv") as fh:
        surf = list(csv.reader(fh))
    assert surf[0] == ["T", "x", "value"]
    assert len(surf) - 1 == (cfg["grid"]["M"] + 1) * (cfg["grid"]["N"] + 1)
    conv = json.loads((out / "convergence.json").read_text())
    assert all(list(r) == ["n", "gap", "apriori_bound", "refined_bound", "ratio"] for r in conv)
    assert conv[0]["ratio"] is None
    quotes = json.loads((out / "oracle_quotes.json").read_text())
    assert [q["kind"] for q in quotes] == ["merton_european"] * 3 + ["lsmc"]
    assert quotes[-1]["std_error"] > 0


def test_floats_have_12_significant_digits(tmp_path):
    out = tmp_path / "out"
    cli.main(["run", write(tmp_path, merton_config(out))])
    with open(out / "value_surface.csv") as fh:
        next(fh)
        for line in fh:
            for field in line.strip().split(","):
                digits = field.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
                assert len(digits) <= 12


def test_run_is_deterministic(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        assert cli.main(["run", write(tmp_path, merton_config(out), f"c{k}.json")]) == 0
        outs.append(out)
    for name in ("value_surface.csv", "boundary.csv", "convergence.json", "oracle_quotes.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def parse_quote(line):
    return dict(item.split("=") for item in line.split())


def test_at_zero_spot(tmp_path, capsys):
    # [TRIVIAL]
    assert cli.main(["at", write(tmp_path, merton_config(tmp_path)), "--spot", "0", "--maturity", "0.3"]) == 0
    q = parse_quote(capsys.readouterr().out)
    assert float(q["price"]) == K
    assert int(q["iterations"]) >= 1
    assert float(q["refined_bound"]) <= float(q["apriori_bound"])


def test_at_zero_maturity(tmp_path, capsys):
    # [TRIVIAL]
    assert cli.main(["at", write(tmp_path, merton_config(tmp_path)), "--spot", "90", "--maturity", "0"]) == 0
    assert float(parse_quote(capsys.readouterr().out)["price"]) == pytest.approx(10.0, abs=1e-9)


def test_at_the_money_between_european_and_strike(tmp_path, capsys):
    # [DERIVED]
    cfg = merton_config(tmp_path)
    assert cli.main(["at", write(tmp_path, cfg), "--spot", "100", "--maturity", "0.5"]) == 0
    price = float(parse_quote(capsys.readouterr().out)["price"])
    params = cli.parse_config(cfg).params
    assert merton_european_put(params, K, 0.5).price <= price <= K


@pytest.mark.parametrize("spot, maturity", [("-1", "0.2"), ("100", "0.6"), ("100", "-0.1")])
def test_at_out_of_range(tmp_path, spot, maturity):
    assert cli.main(["at", write(tmp_path, merton_config(tmp_path)), "--spot", spot,
                     "--maturity", maturity]) == 1


def test_invariant_violation_exit_2(tmp_path, monkeypatch, capsys):
    def broken(*args, **kwargs):
        raise InvariantViolated(2, "convex")

    monkeypatch.setattr(cli, "run_fixed_point", broken)
    assert cli.main(["run", write(tmp_path, merton_config(tmp_path / "out"))]) == 2
    assert "convex" in capsys.readouterr().err


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 15
    assert all(line.startswith("PASS") for line in lines)


def test_console_entry_point(tmp_path):
    out = tmp_path / "out"
    proc = subprocess.run([sys.executable, "-m", "jumpput.cli", "run", write(tmp_path, bs_config(out))],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "iterations=1" in proc.stdout
