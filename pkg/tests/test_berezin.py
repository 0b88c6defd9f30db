import numpy as np
import pytest
from scipy.integrate import quad

from resolvent_lab import berezin as bz
from resolvent_lab.fock import FockSpace, WeightVector, coherent_norm_defect, sigma_t
from resolvent_lab.operators import OperatorMatrix, ResolventDescriptor, identity, resolvent_matrix, weyl_matrix
from resolvent_lab.symbols import parse_symbol

T1 = WeightVector((1.0,))


def test_identity_is_one_minus_defect():
    sp = FockSpace(1, 10)
    w = [1.2 + 0.3j]
    v = bz.berezin_operator(identity(sp), w)
    assert v.value.real == pytest.approx(1 - coherent_norm_defect(w, sp), abs=1e-14)
    assert v.method == "operator"


def test_weyl_at_origin():
    z = [0.7 - 0.4j]
    v = bz.berezin_operator(weyl_matrix(z, FockSpace(1, 40)), [0.0])
    assert v.value == pytest.approx(np.exp(-0.5 * abs(z[0]) ** 2), abs=1e-12)


def test_hermitian_expectation_is_real(rng):
    sp = FockSpace(2, 4)
    H = rng.normal(size=(sp.dim, sp.dim)) + 1j * rng.normal(size=(sp.dim, sp.dim))
    v = bz.berezin_operator(OperatorMatrix(sp, H + H.conj().T), [0.3, -0.2j])
    assert abs(v.value.imag) <= 1e-12


def test_operator_value_bounded_by_norm():
    sp = FockSpace(1, 30)
    R = resolvent_matrix(ResolventDescriptor(1.0, (1.0,)), sp)
    v = bz.berezin_operator(R, [0.5j])
    assert abs(v.value) <= np.linalg.norm(R.entries, 2) + v.budget


def test_single_factor_oracle():
    v = bz.berezin_resolvent_product([(1.0, [np.sqrt(2.0)], 1)], [0.0], T1)
    ref = quad(lambda s: np.exp(-s - s * s), 0, np.inf, epsabs=1e-14)[0]
    assert v.value == pytest.approx(1j * ref, abs=1e-10)
    assert ref == pytest.approx(0.5456, abs=1e-4)


def test_sigma_zero_probe_invariance():
    fac = [(1.0, [1.0, 0.0], 1), (-1.5, [0.0, 1.0j], 2)]
    t = WeightVector((1.0, 0.5))
    w = [0.8, -0.3j]      # real on mode 1, imaginary on mode 2: sigma_t(w, z_j) = 0
    assert all(sigma_t(w, z, t) == 0 for _, z, _ in fac)
    a = bz.berezin_resolvent_product(fac, w, t).value
    b = bz.berezin_resolvent_product(fac, [0.0, 0.0], t).value
    assert a == pytest.approx(b, abs=1e-10)


def test_swap_symmetry():
    t = WeightVector((1.0, 1.0))
    f1, f2 = (2.0, [1.0, 0.0], 1), (2.0, [0.0, 0.5 + 0.5j], 1)
    w = [0.3j, 0.1 - 0.2j]
    a = bz.berezin_resolvent_product([f1, f2], w, t).value
    b = bz.berezin_resolvent_product([f2, f1], w, t).value
    assert a == pytest.approx(b, abs=1e-10)


def test_exact_single_factor_matches_quadrature():
    for lam, z, w in [(1.0, [1.0], [0.5]), (-1.5 + 0.5j, [0.7j], [0.6]), (2 + 1j, [0.5 + 0.5j], [0.3 - 0.2j])]:
        a = bz.resolvent_berezin_exact(lam, z, w, T1)
        b = bz.berezin_resolvent_product([(lam, z, 1)], w, T1).value
        assert a == pytest.approx(b, abs=1e-9)


def test_constant_symbol():
    for m in ("closed-form", "convolution", "tensor"):
        if m == "closed-form":
            continue
        assert bz.berezin_symbol(parse_symbol("2.5"), [1.0], T1, m).value == pytest.approx(2.5)


def test_weyl_symbol_transform():
    z, w = [0.6 + 0.2j], [0.4 - 0.5j]
    g = parse_symbol("W([0.6+0.2i])")
    want = np.exp(-0.5 * abs(z[0]) ** 2 + 2j * sigma_t(w, z, T1))
    assert bz.berezin_symbol(g, w, T1, "convolution").value == pytest.approx(want, abs=1e-10)
    assert bz.berezin_symbol(g, w, T1, "tensor", q=60).value == pytest.approx(want, abs=1e-10)
    # and the operator route: the Berezin transform of W_z
    op = bz.berezin_operator(weyl_matrix(z, FockSpace(1, 40)), w).value
    assert op == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("text,w", [("R(1;[1])", [0.5j]), ("R(-1+0.5i;[0.3+0.8i])^2", [0.2]),
                                    ("R(2;[1,0])*R(-1;[0,1i])", [0.3, 0.1j])])
def test_symbol_backends_agree(text, w):
    g = parse_symbol(text)
    t = WeightVector.ones(len(w))
    cf = bz.berezin_symbol(g, w, t, "closed-form").value
    cv = bz.berezin_symbol(g, w, t, "convolution", q=300).value
    assert abs(cf - cv) <= 1e-7


def test_mc_backend_within_stderr():
    g = parse_symbol("R(1;[1])")
    v = bz.berezin_symbol(g, [0.3], T1, "mc", samples=100_000, seed=3)
    exact = bz.berezin_symbol(g, [0.3], T1, "closed-form").value
    assert abs(v.value - exact) <= v.budget


def test_printed_constant_fails_for_negative_real_part():
    fx = {"factors": [(-1.0, [1.0], 2)], "w": [0.5j], "t": (1.0,)}
    r = bz.threeway(fx, D=40)
    assert r["agree"] and r["printed_deviation"] > 100 * r["budget_op_closed"]


def test_threeway_subset():
    fxs = bz.threeway_fixtures()
    for i in (0, 3, 9, 13):
        r = bz.threeway(fxs[i], D=40 if len(fxs[i]["t"]) == 1 else 24)
        assert r["agree"], (i, r["op_vs_closed"], r["budget_op_closed"])


def test_noncommuting_rejected_by_convolution():
    with pytest.raises(ValueError):
        bz.product_via_convolution([(1.0, [1.0], 1), (1.0, [1.0j], 1)], [0.0], T1)


def test_sign_verdict():
    v = bz.sign_adjudicate(D=40)
    assert v["decisive"] and v["winner"] == "+i" and v["published_value"] == "-i"


def test_gelfand_sigma_zero_constant():
    desc = ResolventDescriptor(1.0, (1.0, 0.0))
    line = bz.AffineLine((0.2j, 0.5), (4.0, 0.0))
    r = bz.gelfand_limit(desc, line, (1.0, 1.0))
    assert r["case"] == "sigma-zero" and r["tag"] == "constant" and r["max_deviation"] == 0.0


def test_gelfand_decay_rate():
    desc = ResolventDescriptor(1.0, (1.0, 0.0))
    r = bz.gelfand_limit(desc, bz.AffineLine((0, 0), (1j, 0)), (1.0, 1.0))
    assert r["case"] == "sigma-nonzero" and r["tag"] == "decays"
    assert r["slope"] == pytest.approx(-1.0, abs=0.05)


def test_gelfand_short_schedule_inconclusive():
    desc = ResolventDescriptor(1.0, (1.0,))
    r = bz.gelfand_limit(desc, bz.AffineLine((0,), (1j,), alphas=(1.0, 1.5, 2.0, 2.5)), (1.0,))
    assert r["tag"] == "inconclusive"


def test_gelfand_x_shift_invariance():
    desc = ResolventDescriptor(1.0, (1.0,))
    y = (0.5,)
    a = bz.gelfand_limit(desc, bz.AffineLine((0.3j,), y), (1.0,))["limit"]
    b = bz.gelfand_limit(desc, bz.AffineLine((0.3j + 2.0,), y), (1.0,))["limit"]
    assert a == pytest.approx(b, abs=1e-14)


def test_affine_line_validation():
    with pytest.raises(ValueError):
        bz.AffineLine((0,), (0,))
    with pytest.raises(ValueError):
        bz.AffineLine((0,), (1,), alphas=(2.0, 1.0))


def test_shift_at_berezin_level():
    r = bz.berezin_shift_residual(1.0, [1.0], [0.2], [1j], T1)
    assert r["residual"] <= 1e-12 and r["swapped_residual"] > 0.1


def test_dilation_examples():
    one = bz.dilation_adjudicate(parse_symbol("1"), 2.0, [0.3], T1)
    assert one["winner"] == "no-prefactor"
    assert one["candidates"]["rho^2-prefactor"] == pytest.approx(4.0)
    res = bz.dilation_adjudicate(parse_symbol("R(1;[1])"), np.sqrt(2.0), [0.4j], T1)
    assert res["winner"] == "no-prefactor" and res["rhs_backend"] == "tensor"
    assert not bz.dilation_adjudicate(parse_symbol("R(1;[1])"), 1.0, [0.4j], T1)["decisive"]


def test_decay_controls():
    one = bz.c0_decay_check(parse_symbol("1"))
    assert one["non_decaying"] and one["sups"] == [1.0] * 5
    single = bz.c0_decay_check(parse_symbol("R(1;[1])"), radii=(0, 2, 8), angles=64)
    assert single["non_decaying"]


def test_two_factor_sups_decrease():
    r = bz.c0_decay_check(parse_symbol("R(1;[1])*R(1;[1i])"), radii=(0, 1, 2, 4), angles=64)
    assert r["decreasing"] and r["spans_phase_space"]


def test_moments():
    m1 = bz.moment_check([1.0], T1, 1)
    assert m1["M_k"] == pytest.approx(1.0, abs=1e-12)
    assert m1["published_value"] == "published 2^k"
    c = 0.7 - 0.2j
    for k in (1, 2, 3):
        a = bz.moment_check([1.0 + 0.5j], T1, k)["M_k"]
        b = bz.moment_check([c * (1.0 + 0.5j)], T1, k)["M_k"]
        assert b == pytest.approx(abs(c) ** (2 * k) * a, rel=1e-12)
    m2 = bz.moment_check([0.4, 1j], (1.0, 0.5), 2)
    assert m2["ratio_to_M1_power"] == pytest.approx(2.0, abs=1e-12)
    assert m2["tensor_M_k"] == pytest.approx(m2["M_k"], rel=1e-10)


def test_injectivity_proxy():
    sp = FockSpace(1, 12)
    ops = [resolvent_matrix(ResolventDescriptor(l, (z,)), sp) for l in (1.0, 2.0, -1.0) for z in (1.0, 1j)]
    probes = [[0.0], [0.5], [0.5j], [-0.4 + 0.3j]]
    r = bz.injectivity_proxy(ops, probes)
    assert r["pairs"] == 15 and r["min_max_difference"] >= 1e-4


def test_value_serializes():
    d = bz.berezin_resolvent_product([(1.0, [1.0], 1)], [0.0], T1).to_dict()
    assert d["method"] == "closed-form" and len(d["value"]) == 2
