"""Backend equivalence: every numba kernel matches its numpy twin bitwise."""

import numpy as np
import pytest

from msqs import _kernels
from msqs._kernels import KERNEL_PAIRS, backend

NX, NY = 24, 17


def _fields(rng, shape=(NX, NY), n=3):
    return [np.ascontiguousarray(rng.standard_normal(shape)) for _ in range(n)]


def _case_update_hz(rng):
    hz, ex, ey = _fields(rng)
    ikx = rng.uniform(0.5, 1.0, NX)
    iky = rng.uniform(0.5, 1.0, NY)
    return (hz,), (ex, ey, 0.7, 1.0, 1.25, ikx, iky)


def _case_update_ex(rng):
    ex, hz = _fields(rng, n=2)
    iky = rng.uniform(0.5, 1.0, NY)
    return (ex,), (hz, 0.7, 1.25, iky)


def _case_update_ey(rng):
    ey, hz = _fields(rng, n=2)
    ikx = rng.uniform(0.5, 1.0, NX)
    return (ey,), (hz, 0.7, 1.0, ikx)


def _case_cpml_x(rng, tn):
    f, src, psi = _fields(rng)
    b = rng.uniform(0.2, 0.9, NX)
    c = rng.uniform(0.0, 0.4, NX)
    return (f, psi), (src, b, c, 0.7, 1.0, 2, 7, tn), 1


def _case_cpml_y(rng, tn):
    f, src, psi = _fields(rng)
    b = rng.uniform(0.2, 0.9, NY)
    c = rng.uniform(0.0, 0.4, NY)
    return (f, psi), (src, b, c, 0.7, 1.0, 2, 7, tn), 1


def _case_ade(rng):
    e = rng.standard_normal((NX, NY))
    bnx, bny = 9, 6
    w = rng.choice([0.0, 0.5, 1.0], size=(bnx, bny))
    state = [rng.standard_normal((bnx, bny)) for _ in range(7)]
    coeffs = rng.uniform(-0.3, 0.3, 8)
    return ((e, *state),
            (w, 3, 4, 2.3e-3, 13.6, 0.99, 0.01, *coeffs))


def _case_df_sweep(rng):
    new, cur, old, src2 = _fields(rng, n=4)
    return (new,), (cur, old, src2, 0.2, 0.25, 0.1, 0.55)


def _case_poisson_residual(rng):
    ph, src = _fields(rng, n=2)
    return (), (ph, src, 1.0, 0.64)


def _case_deposit(rng):
    target = np.zeros((NX, NY))
    values = rng.standard_normal((10, 9))
    return (target,), (values, -1.3, 2.1, 0.4, 1.7)


def _run_pair(name, out_builder, rng_seed=7):
    """Run both backends on identical inputs; return the two mutable states."""
    nb_fn, np_fn = KERNEL_PAIRS[name]
    results = []
    for fn in (nb_fn, np_fn):
        rng = np.random.default_rng(rng_seed)
        built = out_builder(rng)
        if name == "ade_update":
            mutated, rest = built
            fn(mutated[0], rest[0], *mutated[1:], *rest[1:])
        elif len(built) == 3:
            mutated, rest, split = built
            fn(*mutated[:split], *rest[:1], *mutated[split:], *rest[1:])
        else:
            mutated, rest = built
            ret = fn(*mutated, *rest)
            if not mutated:
                mutated = (np.array([ret]),)
        results.append([np.array(m, copy=True) for m in mutated])
    return results


CASES = {
    "update_hz": _case_update_hz,
    "update_ex": _case_update_ex,
    "update_ey": _case_update_ey,
    "cpml_hz_x": lambda rng: _case_cpml_x(rng, NY - 1),
    "cpml_hz_y": lambda rng: _case_cpml_y(rng, NX - 1),
    "cpml_ex_y": lambda rng: _case_cpml_y(rng, NX),
    "cpml_ey_x": lambda rng: _case_cpml_x(rng, NY),
    "ade_update": _case_ade,
    "df_sweep": _case_df_sweep,
    "poisson_residual": _case_poisson_residual,
    "deposit_bilinear": _case_deposit,
}


def test_every_kernel_has_a_case():
    assert sorted(CASES) == sorted(KERNEL_PAIRS)


@pytest.mark.parametrize("name", sorted(KERNEL_PAIRS))
def test_backends_agree_bitwise(name):
    got_nb, got_np = _run_pair(name, CASES[name])
    assert len(got_nb) == len(got_np)
    for a, b in zip(got_nb, got_np):
        assert np.array_equal(a, b), f"{name}: backends diverge"


@pytest.mark.parametrize("name", ["cpml_hz_x", "cpml_hz_y",
                                  "cpml_ex_y", "cpml_ey_x"])
@pytest.mark.parametrize("trim", [0, 1])
def test_cpml_transverse_extent_respected(name, trim):
    """Nodes beyond the stated transverse extent stay untouched."""
    along_x = name.endswith("_x")
    full = NY if along_x else NX
    tn = full - trim
    builder = (lambda rng: _case_cpml_x(rng, tn)) if along_x else (
        lambda rng: _case_cpml_y(rng, tn))
    for fn in KERNEL_PAIRS[name]:
        rng = np.random.default_rng(11)
        (f, psi), rest, _ = builder(rng)
        f_before = f.copy()
        psi_before = psi.copy()
        fn(f, rest[0], psi, *rest[1:])
        if trim:
            if along_x:
                assert np.array_equal(f[:, tn:], f_before[:, tn:])
                assert np.array_equal(psi[:, tn:], psi_before[:, tn:])
            else:
                assert np.array_equal(f[tn:, :], f_before[tn:, :])
                assert np.array_equal(psi[tn:, :], psi_before[tn:, :])
        else:
            assert not np.array_equal(f, f_before)


def test_backend_name_reports_selection():
    assert backend() in ("numba", "numpy")
    assert backend() == ("numba" if _kernels.USE_NUMBA else "numpy")


def test_public_names_bound_to_selected_backend():
    idx = 0 if _kernels.USE_NUMBA else 1
    for name, pair in KERNEL_PAIRS.items():
        assert getattr(_kernels, name) is pair[idx]
