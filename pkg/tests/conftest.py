import numpy as np
import pytest

from vinerisk.copula import ALL_FAMILIES, FamilyId, PairCopula

# three parameter values per base family, moderate to strong dependence
PARAMS = {
    "indep": [None],
    "gaussian": [-0.7, 0.2, 0.8],
    "clayton": [0.5, 2.0, 5.0],
    "gumbel": [1.3, 2.0, 4.0],
    "frank": [-8.0, 2.0, 10.0],
    "joe": [1.3, 2.0, 4.0],
}

# for the density-normalisation oracle: kendall tau up to about 0.5, where a
# 64 x 64 tensor Gauss-Legendre rule resolves the corner peaks to 1e-3
PARAMS_QUAD = {
    "indep": [None],
    "gaussian": [-0.6, 0.2, 0.7],
    "clayton": [0.5, 1.0, 2.0],
    "gumbel": [1.2, 1.5, 2.0],
    "frank": [-5.0, 2.0, 5.0],
    "joe": [1.3, 1.8, 2.5],
}


def family_params(table=PARAMS):
    return [(f, t) for f in ALL_FAMILIES for t in table[f.kind]]


def fam_id(val):
    if isinstance(val, FamilyId):
        return val.token
    return None


def gl_unit(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@pytest.fixture
def gaussian_yvine_q1():
    """Y-vine with one predictor and Gaussian edges (rho 0.6, 0.5, top 0.4)."""
    from vinerisk.copula import GAUSSIAN
    from vinerisk.yvine import YVineModel

    g = lambda r: PairCopula.from_param(GAUSSIAN, r)
    return YVineModel(("x1",), (g(0.6),), (g(0.5),), g(0.4), {}, (), ("frost", "drought"))


# --------------------------------------------------------------------------- acceptance report

ACCEPTANCE = {}


def report(number: int, ok: bool, detail: str) -> None:
    """Record and print the pass/fail line of an acceptance criterion."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
