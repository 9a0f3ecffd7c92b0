import numpy as np
import pytest
import scipy.linalg

from conftest import full
from edgelink.errors import CalibrationError, IntegrityError
from edgelink.lattice import SystemSpec, build_system
from edgelink.spectral import (BAND_TOP, INNER_BAND_TOP, OUTER_BAND_BOTTOM, bulk_dispersion,
                               bulk_quartic, classify_states, diagonalize, edge_cubic,
                               edge_dispersion, edge_window)


def _count_below(m, x):
    """Number of eigenvalues of Hermitian ``m`` below ``x`` from the LDL inertia."""
    _, d, _ = scipy.linalg.ldl(m - x * np.eye(len(m)), hermitian=True)
    # d is block diagonal with 1x1 and 2x2 blocks; eigenvalues keep the inertia
    return int(np.sum(np.linalg.eigvalsh(d) < 0))


def _bisect_eigenvalue(m, k, lo, hi, tol=1e-12):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _count_below(m, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_eigenvalues_match_inertia_bisection_oracle():
    H = build_system(SystemSpec.square(7, -1.75, 0.2))
    s = diagonalize(H)
    bound = np.max(np.sum(np.abs(H.matrix), axis=1))
    for k in range(H.dim):
        ref = _bisect_eigenvalue(np.array(H.matrix), k, -bound - 1, bound + 1)
        assert abs(s.eigenvalues[k] - ref) < 1e-8


def test_eigenpairs_residual_orthonormality_and_phase():
    H = build_system(SystemSpec.square(9, -1.7, 0.3))
    s = diagonalize(H)
    V = s.eigenvectors
    res = np.linalg.norm(H.matrix @ V - V * s.eigenvalues, axis=0)
    assert res.max() <= 1e-10 * np.linalg.norm(H.matrix, 2)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(H.dim), atol=1e-10)
    lead = V[np.argmax(np.abs(V), axis=0), np.arange(H.dim)]
    assert np.all(np.abs(lead.imag) < 1e-14) and np.all(lead.real > 0)


def test_completeness_on_every_site():
    s = full(9, -1.7, 0.2)
    np.testing.assert_allclose(np.sum(np.abs(s.eigenvectors) ** 2, axis=1), 1.0, atol=1e-10)


def test_large_lattice_inside_bulk_bounds(iso35):
    assert np.max(np.abs(iso35.eigenvalues)) <= BAND_TOP + 1e-9


def test_decoupled_qubit_energy_doubly_degenerate():
    s = full(7, -1.75, 0.0)
    assert np.sum(np.abs(s.eigenvalues + 1.75) < 1e-12) == 2


def test_non_hermitian_rejected():
    H = build_system(SystemSpec.square(3, -1.0, 0.1))
    m = np.array(H.matrix)
    m[0, 1] += 1e-6
    with pytest.raises(IntegrityError):
        diagonalize(H.with_matrix(m))


def test_bulk_dispersion_special_points(rng):
    np.testing.assert_allclose(bulk_dispersion(0, 0), [-BAND_TOP, 0, 0, BAND_TOP], atol=1e-15)
    e = bulk_dispersion(np.pi / 2, np.pi / 2)
    np.testing.assert_allclose(e, [-OUTER_BAND_BOTTOM, -INNER_BAND_TOP, INNER_BAND_TOP,
                                   OUTER_BAND_BOTTOM], atol=1e-14)
    assert INNER_BAND_TOP == pytest.approx(1.0824, abs=1e-4)
    assert OUTER_BAND_BOTTOM == pytest.approx(2.6131, abs=1e-4)
    for kx, ky in rng.uniform(-np.pi, np.pi, (50, 2)):
        for lam in bulk_dispersion(kx, ky):
            assert abs(bulk_quartic(lam, kx, ky)) < 1e-12


@pytest.mark.parametrize("variant", ["black-edge", "blue-edge"])
def test_edge_dispersion_six_roots(variant, rng):
    for kx in rng.uniform(-np.pi, np.pi, 20):
        pts = edge_dispersion(kx, variant)
        assert len(pts) == 6
        for p in pts:
            sign = 1 if p.branch < 3 else -1
            assert abs(edge_cubic(p.lam, kx, sign, variant)) < 1e-10
            if p.localized:
                assert abs(p.decay_factor) < 1


def test_edge_velocity_at_working_energy():
    # follow each localized branch until it crosses -1.75 J
    kxs = np.linspace(-np.pi, np.pi, 2001)
    found = []
    prev = None
    for kx in kxs:
        pts = {p.branch: p for p in edge_dispersion(kx) if p.localized}
        if prev is not None:
            for b, p in pts.items():
                q = prev.get(b)
                if q is not None and (q.lam + 1.75) * (p.lam + 1.75) < 0:
                    found.append(p)
        prev = pts
    assert found
    for p in found:
        assert p.group_velocity is not None and np.isfinite(p.group_velocity)
        assert abs(p.group_velocity) > 1e-3


def test_edge_dispersion_bad_variant():
    with pytest.raises(ValueError):
        edge_dispersion(0.3, "red-edge")


def test_classification_by_energy(iso35):
    labels = dict(zip(np.round(iso35.eigenvalues, 12), iso35.bands))
    for e, b in labels.items():
        a = abs(e)
        if a < INNER_BAND_TOP or a > OUTER_BAND_BOTTOM:
            assert b == "bulk"
        else:
            assert b == "edge"
    assert INNER_BAND_TOP < 1.75 < OUTER_BAND_BOTTOM
    assert not INNER_BAND_TOP <= 0.3


def test_qubit_dominated_label():
    s = classify_states(full(7, -1.75, 0.001))
    assert np.sum(s.bands == "qubit") == 2


def test_edge_count_grows_linearly(iso35):
    small = classify_states(diagonalize(build_system(SystemSpec.square(25, qubits=False))))
    r25 = np.sum(small.bands == "edge") / 25
    r35 = np.sum(iso35.bands == "edge") / 35
    assert abs(r35 - r25) / r25 < 0.2


def test_window_constants_large_lattice(cal35):
    assert cal35.rho_e == pytest.approx(0.46, abs=0.02)
    assert cal35.A_f == pytest.approx(0.16, abs=0.02)
    assert cal35.B_f == pytest.approx(-0.31, abs=0.03)
    assert cal35.E_l <= -1.75 <= cal35.E_next
    assert cal35.E_next == pytest.approx(-1.7307, abs=1e-4)
    assert cal35.delta_E > 0 and cal35.parity_l in (1, -1)


def test_density_converges(cal35):
    iso25 = classify_states(diagonalize(build_system(SystemSpec.square(25, qubits=False))))
    assert abs(edge_window(iso25, -1.75).rho_e - cal35.rho_e) < 0.02


def test_window_outside_edge_band(iso21):
    with pytest.raises(CalibrationError):
        edge_window(iso21, -0.3)
    with pytest.raises(CalibrationError):
        edge_window(iso21, -2.7)
