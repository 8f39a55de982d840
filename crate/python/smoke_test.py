"""Smoke test for the pyrabox extension module.

Build and copy the module next to this script, then run it:

    cargo build --release -p rabox-py
    cp target/release/libpyrabox.so python/pyrabox.so
    python3 python/smoke_test.py
"""

import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pyrabox  # noqa: E402


def main():
    f2 = pyrabox.Group("free(2)")
    assert f2.order is None
    assert len(f2.ball(2)) == 17
    assert f2.word_length(f2.multiply("ab", "B")) == 1

    z = pyrabox.Chain("intlattice(1)", "pow2(levels=6)")
    assert z.levels == [1, 2, 3, 4, 5, 6]
    assert z.quotient(4).order == 16
    assert z.quotient_length(3, "(7)") == 1
    assert z.separation(3) == ("radius", 7)
    assert z.component_separation(2, 5) == 7

    cert = pyrabox.Certificate.forward("intlattice(1)", "pow2(levels=6)", "lattice", 8)
    assert cert.excluded(4) == [1, 2, 3]
    assert all(cert.verify(r) for r in (2, 4, 8))
    again = pyrabox.Certificate.from_json(cert.to_json())
    assert again.verify(4)

    manifest = json.loads(cert.to_json())
    manifest["rho2_sq"]["squares"][3] = "4"
    assert not pyrabox.Certificate.from_json(json.dumps(manifest)).verify(4)

    psi = cert.backward(6)
    assert psi.passed
    assert all(int(v) == int(g.strip("()")) ** 2 for g, v in psi.values.items())

    try:
        pyrabox.Certificate.forward("free(2)", "lcs(levels=2)", "free-wall", 3)
    except pyrabox.ScopeError:
        pass
    else:
        raise AssertionError("expected ScopeError")

    line = [0, 1, 3, 7, 12]
    dist = [[abs(a - b) for b in line] for a in line]
    assert pyrabox.cnd_check(dist).is_cnd
    neg = pyrabox.cnd_check([[-x for x in row] for row in dist])
    assert not neg.is_cnd and neg.sampling_agrees

    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "z.cfg")
        with open(cfg, "w") as fh:
            fh.write("group = intlattice(1)\nchain = pow2(levels=4)\n")
        assert pyrabox.run_cli(["boxfam", "--config", cfg, "--out", os.path.join(tmp, "out")]) == 0

    print("smoke test passed")


if __name__ == "__main__":
    main()
