import numpy as np
import pytest

from sfwm import obe
from sfwm.params import PhysicalParams

RESIDUAL_TOL = 1e-10


@pytest.fixture(scope="module")
def params():
    return PhysicalParams()


class TestZerothOrder:
    def test_no_excitation(self):
        p = PhysicalParams(omega_c=0.0, omega_p=0.0)
        sol = obe.solve_zeroth_order(p, 12.3)
        assert sol.rho11 == pytest.approx(1.0, abs=1e-14)
        for value in (sol.rho22, sol.rho33, sol.rho44, sol.rho21, sol.rho42, sol.rho41):
            assert abs(value) < 1e-14

    @pytest.mark.parametrize("omega_d", [0.0, 1.7, -8.0, 53.3, -160.0, 380.0])
    def test_backsubstitution_residual(self, params, omega_d):
        sol = obe.solve_zeroth_order(params, omega_d)
        assert obe.zeroth_order_residual(sol, params, omega_d) < RESIDUAL_TOL

    @pytest.mark.parametrize("omega_d", [0.0, 2.0, -25.0, 100.0])
    def test_population_invariants(self, params, omega_d):
        sol = obe.solve_zeroth_order(params, omega_d)
        assert sum(sol.populations) == pytest.approx(1.0, abs=1e-10)
        for pop in sol.populations:
            assert -1e-10 <= pop <= 1.0 + 1e-10

    def test_upper_population_decreases_with_detuning(self, params):
        # larger one-photon detuning weakens the two-photon excitation: the
        # velocity-integrated upper population falls monotonically; at the
        # resonant class itself the same holds once fields are weak enough
        # that light shifts don't move the resonance off the naive class
        from sfwm.params import FrameParams

        integrated = []
        grid = np.linspace(-60.0, 60.0, 1201)
        for delta_atom in np.geomspace(100.0, 1000.0, 10):
            p = params.with_frame(FrameParams(0.0, float(delta_atom)))
            z = obe.solve_zeroth_order_batch(p, grid)
            integrated.append(float(np.trapezoid(z["rho44"], grid)))
        assert all(a > b for a, b in zip(integrated, integrated[1:]))

        at_class = []
        for delta_atom in np.geomspace(100.0, 1000.0, 10):
            p = params.replace(omega_c=2.0, omega_p=6.0).with_frame(FrameParams(0.0, float(delta_atom)))
            at_class.append(obe.solve_zeroth_order(p, 0.0).rho44)
        assert all(a > b for a, b in zip(at_class, at_class[1:]))

    def test_batch_matches_pointwise(self, params):
        nodes = np.linspace(-40.0, 40.0, 17)
        batch = obe.solve_zeroth_order_batch(params, nodes)
        for i, omega_d in enumerate(nodes):
            sol = obe.solve_zeroth_order(params, float(omega_d))
            assert batch["rho21"][i] == pytest.approx(sol.rho21, rel=1e-12, abs=1e-15)
            assert batch["rho42"][i] == pytest.approx(sol.rho42, rel=1e-12, abs=1e-15)
            assert batch["rho41"][i] == pytest.approx(sol.rho41, rel=1e-12, abs=1e-15)
            assert batch["pop11_33"][i] == pytest.approx(sol.rho11 - sol.rho33, rel=1e-12, abs=1e-15)
            assert batch["pop33_44"][i] == pytest.approx(sol.rho33 - sol.rho44, rel=1e-12, abs=1e-15)

    def test_singular_system_reported(self):
        p = PhysicalParams(gamma2=0.0, gamma3=0.0, gamma4=0.0, gamma_dec=0.0, omega_c=0.0, omega_p=0.0)
        with pytest.raises(obe.SingularSystemError) as err:
            obe.solve_zeroth_order(p, 3.0)
        assert "omega_d=3" in str(err.value)


class TestFirstOrder:
    def test_residuals_per_drive(self, params):
        for omega_d, delta_s in ((0.0, 0.0), (4.5, 2.0), (-30.0, -7.0), (120.0, 15.0)):
            zeroth = obe.solve_zeroth_order(params, omega_d)
            responses = obe.first_order_unit_responses(zeroth, params, omega_d, delta_s)
            for drive, sol6 in responses.items():
                drives = {name: (1.0 if name == drive else 0.0) for name in obe.DRIVES}
                res = obe.first_order_residual(sol6, drives, zeroth, params, omega_d, delta_s)
                assert res < RESIDUAL_TOL, f"drive {drive} at ({omega_d}, {delta_s})"

    def test_two_level_closed_form(self):
        # without drive fields the idler response reduces to a two-level line
        rng = np.random.default_rng(42)
        for _ in range(50):
            p = PhysicalParams(omega_c=0.0, omega_p=0.0, gamma_dec=float(rng.uniform(0.0, 2.0)))
            omega_d = float(rng.uniform(-120.0, 120.0))
            delta_s = float(rng.uniform(-60.0, 60.0))
            zeroth = obe.solve_zeroth_order(p, omega_d)
            triple = obe.solve_first_order(zeroth, p, omega_d, delta_s)
            _, _, d31 = obe.first_order_detunings(p, omega_d, delta_s)
            expected = -0.5j / d31
            assert abs(triple.d_rho31_d_omega_i - expected) / abs(expected) < RESIDUAL_TOL
            assert abs(triple.d_rho31_d_omega_s_conj) == 0.0

    def test_no_pump_kills_cross_coupling(self):
        p = PhysicalParams(omega_p=0.0)
        zeroth = obe.solve_zeroth_order(p, 5.0)
        triple = obe.solve_first_order(zeroth, p, 5.0, 1.0)
        assert abs(triple.d_rho31_d_omega_s_conj) < 1e-14

    def test_linearity_against_finite_drives(self, params):
        rng = np.random.default_rng(3)
        for _ in range(5):
            omega_d = float(rng.uniform(-40.0, 40.0))
            delta_s = float(rng.uniform(-15.0, 15.0))
            zeroth = obe.solve_zeroth_order(params, omega_d)
            responses = obe.first_order_unit_responses(zeroth, params, omega_d, delta_s)
            omega_s = 1e-4 * np.exp(1j * rng.uniform(0, 2 * np.pi))
            omega_i = 1e-4 * np.exp(1j * rng.uniform(0, 2 * np.pi))
            drives = {
                "omega_s": omega_s,
                "omega_s_conj": np.conj(omega_s),
                "omega_i": omega_i,
                "omega_i_conj": np.conj(omega_i),
            }
            m, rhs = obe.first_order_system(zeroth, params, omega_d, delta_s)
            direct = np.linalg.solve(m, sum(drives[n] * rhs[n] for n in obe.DRIVES))
            combo = sum(drives[n] * responses[n] for n in obe.DRIVES)
            rel = np.max(np.abs(direct - combo) / np.maximum(np.abs(direct), 1e-30))
            assert rel < 1e-8

    def test_conjugate_drive_pairs_give_conjugate_responses(self, params):
        # the block structure pairs each formal drive with its conjugate:
        # the response to the starred slot is the swapped conjugate of the
        # response to the unstarred one
        rng = np.random.default_rng(9)
        for _ in range(5):
            omega_d = float(rng.uniform(-20.0, 20.0))
            delta_s = float(rng.uniform(-10.0, 10.0))
            zeroth = obe.solve_zeroth_order(params, omega_d)
            responses = obe.first_order_unit_responses(zeroth, params, omega_d, delta_s)
            for plain, starred in (("omega_s", "omega_s_conj"), ("omega_i", "omega_i_conj")):
                swapped = np.concatenate([responses[plain][3:], responses[plain][:3]])
                np.testing.assert_allclose(responses[starred], np.conj(swapped), rtol=1e-12, atol=1e-15)

    def test_physical_drives_give_conjugate_pair_solution(self, params):
        # with physically consistent drives the starred unknowns must come
        # out as exact conjugates of the unstarred ones
        zeroth = obe.solve_zeroth_order(params, 7.0)
        m, rhs = obe.first_order_system(zeroth, params, 7.0, -2.0)
        omega_s = 3.0e-3 * np.exp(0.4j)
        omega_i = 1.0e-3 * np.exp(-1.1j)
        drives = {
            "omega_s": omega_s,
            "omega_s_conj": np.conj(omega_s),
            "omega_i": omega_i,
            "omega_i_conj": np.conj(omega_i),
        }
        x = np.linalg.solve(m, sum(drives[n] * rhs[n] for n in obe.DRIVES))
        np.testing.assert_allclose(x[3:], np.conj(x[:3]), rtol=1e-12, atol=1e-18)

    def test_singular_first_order_reported(self):
        p = PhysicalParams(gamma2=0.0, gamma3=0.0, gamma4=0.0, gamma_dec=0.0, omega_c=0.0, omega_p=0.0)
        zeroth = obe.ZerothOrderSolution(1.0, 0.0, 0.0, 0.0, 0j, 0j, 0j)
        with pytest.raises(obe.SingularSystemError):
            # signal detuning exactly on the Doppler-shifted line with no damping
            obe.first_order_unit_responses(zeroth, p, 10.0, p.k_ratio_sc * 10.0)
