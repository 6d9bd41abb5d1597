"""Smoke test for the `logtr` extension module.

Build first with `cargo build -p logtr-python --release`; the script copies
the shared library next to a temporary import path and exercises the API.
"""

import json
import pathlib
import shutil
import sys
import tempfile
from fractions import Fraction

ROOT = pathlib.Path(__file__).resolve().parents[3]


def load():
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "liblogtr.so"
        if lib.exists():
            break
    else:
        sys.exit("liblogtr.so not found; run cargo build -p logtr-python --release")
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, pathlib.Path(tmp) / "logtr.so")
    sys.path.insert(0, tmp)
    import logtr

    return logtr


def main():
    logtr = load()

    airy = logtr.Curve.fixture("airy")
    assert airy.ramification_points == ["0"]
    assert Fraction(airy.evaluate("tr", 0, 3, ["1", "2", "3"])) == Fraction(1, 72)

    spec = (ROOT / "specs" / "kappa.json").read_text()
    kappa = logtr.Curve(spec)
    assert kappa.hash == logtr.Curve.fixture("kappa").hash
    assert kappa.vital_points == ["-1"]
    doc = kappa.compute("logtr", 1, 1)
    poles = {p["q"] for t in doc["terms"] for p in t["poles"]}
    assert "-1" in poles, poles
    assert all(isinstance(t["coeff"], str) for t in doc["terms"])
    json.dumps(doc)

    report = kappa.check("bridge", budget=2)
    assert report["pass"], report

    assert logtr.hurwitz(2, [2], 0) == "1/2"
    assert logtr.hurwitz(1, [1], 0) == "1"
    table = logtr.hodge()
    assert table["psi_11"] == table["lambda_11"] == "1/24" and table["consistent"]

    for bad, exc in [
        (lambda: logtr.Curve('{"x": {"rational": {"num": ["0.5"]}}, "y": {}}'), logtr.ParseError),
        (lambda: kappa.compute("logtr", 3, 1), logtr.CapError),
        (lambda: logtr.hurwitz(7, [7], 0), logtr.CapError),
        (lambda: logtr.Curve.fixture("kappa").check("closed"), logtr.AssumptionError),
    ]:
        try:
            bad()
        except exc:
            pass
        else:
            raise AssertionError(f"expected {exc.__name__}")
    assert issubclass(logtr.CapError, logtr.LogtrError)
    assert "lambert" in logtr.fixture_names()
    print("smoke test passed")


if __name__ == "__main__":
    main()
