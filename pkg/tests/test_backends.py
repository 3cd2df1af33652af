"""The compiled kernels and the numpy fallback give the same numbers."""
import json
import os
import subprocess
import sys

import pytest

from jchd import _kernels

SCRIPT = """
import json
from jchd import _kernels as k
fp = k.solve_fixed_point(1.0, 0.01, 1.0, 0.02, 1.0, 0.25, 0.2, 8, 0.1, 1e-10, 10000, 0.5, True)
zc, status = k.bisect_boundary(1.0, 0.0, 1.0, 0.0, 1.0, 0.2, 8, 0.0, 1.0, 1e-6, 60, 1e-6,
                               0.1, 1e-10, 10000, 0.5, True)
h = k.build_hamiltonian(1.0, 0.01, 1.0, 0.02, 1.0, 0.3, 0.16, 0.2, 4)
print(json.dumps({"numba": k.USING_NUMBA, "psi": fp[0], "psi_gamma": fp[1],
                  "energy": [fp[2].real, fp[2].imag], "zc": zc, "status": int(status),
                  "h": [[z.real, z.imag] for z in h.ravel()]}))
"""


def _run(disable):
    env = dict(os.environ, JCHD_DISABLE_NUMBA=disable)
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out.strip().splitlines()[-1])


@pytest.mark.skipif(not _kernels.USING_NUMBA, reason="numba not available")
def test_numba_matches_numpy():
    fast, slow = _run("0"), _run("1")
    assert fast["numba"] and not slow["numba"]
    assert fast["h"] == slow["h"]
    assert fast["status"] == slow["status"] == 0
    for key in ("psi", "psi_gamma", "zc"):
        assert fast[key] == pytest.approx(slow[key], rel=1e-8, abs=1e-12), key
    assert fast["energy"] == pytest.approx(slow["energy"], rel=1e-10)
