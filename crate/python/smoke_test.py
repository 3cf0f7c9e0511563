"""Smoke test for the `fracinv` extension module.

Build it first, e.g. `maturin develop -m crates/python/Cargo.toml`, or copy
`target/release/libfracinv.so` to `fracinv.so` on PYTHONPATH after
`cargo build --release -p fracinv-py --features extension-module`.
"""

import json
import math

import fracinv


def main():
    e = fracinv.mittag_leffler(0.5, -1.0)
    assert abs(e - math.e * math.erfc(1.0)) < 1e-8, e
    assert abs(fracinv.mittag_leffler(1.0, 2.0) - math.exp(2.0)) < 1e-12

    params = fracinv.Case("MMS-1").params
    params.nt = params.nx = 33
    params.modes = 8
    params.ny = 65
    case = fracinv.Case("MMS-1", params)
    assert case.residual(0.01, 0.3, 1.0) < 1e-10

    fwd = fracinv.solve_forward(case)
    assert fwd.u_relative_error < 1e-2, fwd.u_relative_error
    psi = fwd.synthesize()
    assert len(psi) == 33 and len(psi[0]) == 33

    inv = fracinv.solve_inverse(case)
    assert inv.converged and inv.iterations <= 40
    assert all(r <= 0.6 for r in inv.ratios[1:])
    assert inv.h_relative_error < 1e-2, inv.h_relative_error

    again = fracinv.solve_inverse(case, psi=psi)
    assert again.converged and again.residual < 1e-9

    report = json.loads(inv.report_json())
    assert report["converged"]
    constants = json.loads(fracinv.compute_constants(case))
    assert constants["condition4"] <= 1.0

    zero = fracinv.solve_inverse(fracinv.Case("MMS-0", params))
    assert max(abs(v) for row in zero.h for v in row) == 0.0

    try:
        fracinv.Case("MMS-9")
    except ValueError as err:
        assert "MMS-9" in str(err)
    else:
        raise AssertionError("unknown case accepted")

    print("fracinv smoke test passed")


if __name__ == "__main__":
    main()
