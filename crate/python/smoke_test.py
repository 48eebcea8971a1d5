"""Smoke test for the strobosq_py extension module.

Build first with `cargo build --release -p strobosq-py`, then run
`python3 python/smoke_test.py`. An installed `strobosq_py` is used when
available; otherwise the shared library is loaded from target/.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[1]


def load():
    try:
        import strobosq_py

        return strobosq_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libstrobosq_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("strobosq_py", str(lib))
            spec = importlib.util.spec_from_loader("strobosq_py", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("strobosq_py not built; run `cargo build --release -p strobosq-py`")


def main():
    sq = load()

    omega = 2 * math.pi * 1e6
    nbar = sq.thermal_occupation(10e-3, omega)
    assert abs(nbar - 207.87) < 0.01, nbar
    assert sq.thermal_occupation(0.0, omega) == 0.0

    d = sq.rhs(1.0, 0.0, 0.0, 1.0, 0.0, omega, 1.0, 1.0, 1.0)
    assert d == (0.0, 0.0, 0.0, 0.0), d
    total, entangled = sq.duan_sum(0.3, 0.4)
    assert abs(total - 0.7) < 1e-15 and entangled
    assert sq.duan_sum(0.5, 0.5)[1] is False
    assert len(sq.presets()) == 6

    cfg = sq.RunConfig.preset("fig-zoom-0K")
    traj = cfg.simulate()
    assert len(traj) == len(traj.t) > 1
    assert abs(traj.two_sigma_x[0] - math.sqrt(2)) < 1e-12
    summary = traj.summary()
    assert summary["squeezed"] is True
    assert traj.to_csv().startswith("t_s,a11,a12,a21,a22")

    cfg = sq.RunConfig("run.duration = 5e-6\nrun.steps_per_period = 200\n")
    cfg.set("bath.temperature_mK", "0.7")
    assert "bath.temperature_mK = 0.7" in cfg.to_text()
    assert "# derived.nbar" in cfg.echo()

    try:
        cfg.set("pulse.threshold", "1.5")
    except sq.ConfigError as e:
        assert "pulse.threshold" in str(e)
    else:
        raise AssertionError("threshold 1.5 accepted")
    assert issubclass(sq.ConfigError, sq.StrobosqError)

    with tempfile.TemporaryDirectory() as out:
        s = cfg.run(out)
        assert (pathlib.Path(out) / "timeseries.csv").exists()
        assert "final_period_min_two_sigma" in s

    two = sq.simulate_entanglement(cfg, same_phase=True)
    assert len(two["duan_sum"]) == len(two["t"])

    csv = sq.run_sweep(cfg, "eta", [1.0, 0.5], workers=2)
    assert len(csv.strip().splitlines()) == 3

    opt = sq.optimize_pulse(cfg, [0.8, 0.9], refine=False)
    assert opt["best"]["value"] == min(p["value"] for p in opt["grid"])

    print("strobosq_py smoke test passed")


if __name__ == "__main__":
    main()
