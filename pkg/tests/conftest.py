"""Shared fixtures: the reference operating point used across the suite.

Session scope keeps the cost of branch solving and grid building to one
evaluation per object; every fixture is immutable (frozen dataclasses or
arrays treated as read-only by convention).
"""

from __future__ import annotations

import pytest

from hcfwm import fibermodel, gasmedia, jsa, phasematch

# reference operating point: 22 um / 630 nm fiber, xenon at 3.4 bar,
# 1030 nm / 280 fs pump
REF_R_EFF_UM = 22.0
REF_T_NM = 630.0
REF_PRESSURE_BAR = 3.4
REF_LAMBDA_P_NM = 1030.0
REF_FWHM_FS = 280.0


@pytest.fixture(scope="session")
def fiber():
    return fibermodel.FiberModel(R_eff_um=REF_R_EFF_UM, t_nm=REF_T_NM)


@pytest.fixture(scope="session")
def xenon():
    return gasmedia.make_gas("xenon", REF_PRESSURE_BAR)


@pytest.fixture(scope="session")
def vacuum():
    return gasmedia.make_gas("vacuum", 1.0)


@pytest.fixture(scope="session")
def pump():
    return jsa.GaussianPump.from_fwhm(REF_LAMBDA_P_NM, REF_FWHM_FS)


@pytest.fixture(scope="session")
def branch(fiber, xenon, pump):
    branches = phasematch.solve_phase_matching(fiber, xenon, pump.omega_p0)
    assert branches, "reference operating point must phase-match"
    return branches[0]


@pytest.fixture(scope="session")
def grid128(fiber, xenon, pump, branch):
    """Linearized JSA of the reference point at L = 1 m, 128 x 128."""
    return jsa.build_jsa(fiber, xenon, pump, branch, L_m=1.0, n=128)
