"""End-to-end acceptance checks.

Each check records one ``criterion N: PASS|FAIL ...`` line; the lines are
printed as each test finishes and again in the terminal summary (see
``conftest.py``). Run ``python3 tests/test_acceptance.py`` for the lines
alone.
"""
import hashlib
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import random_isometry, random_point, random_points
from hyperball.barycenter import (
    SwarmParams,
    barycenter,
    barycenter_flow,
    dissipation_rate,
    hyp_gradient,
    hyperbolic_norm,
    potential,
    swarm_trajectory,
)
from hyperball.distributions import (
    MoebParams,
    concentration_lower_bound,
    log_normalizer,
    radial_cdf,
    sample,
)
from hyperball.estimation import concentration_score, fit, solve_concentration
from hyperball.geometry import BergmanBall, Disc, PoincareBall

RESULTS: dict[int, str] = {}

CORE_MODELS = [Disc(), PoincareBall(3), BergmanBall(2)]


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


def ks_critical_1pct(n):
    # asymptotic one-sample critical value at the 1% level
    return 1.6276 / math.sqrt(n)


# --------------------------------------------------------------------------
# independent oracles, written from the defining formulas only


def oracle_potential_and_gradient(model, X, a):
    """Potential and its Euclidean gradient in real coordinates."""
    if isinstance(model, BergmanBall):
        r2 = float(np.sum(np.abs(a) ** 2))
        f = 1.0 - X @ np.conj(a)  # 1 - <x, a>
        H = -np.sum(np.log((1 - r2) * (1 - np.sum(np.abs(X) ** 2, axis=1)) / np.abs(f) ** 2))
        G = np.sum(2 * a / (1 - r2) - 2 * X / f[:, None], axis=0)
        return H, np.concatenate([[g.real, g.imag] for g in G])
    if isinstance(model, Disc):
        x = np.column_stack([X.real, X.imag])
        v = np.array([a.real, a.imag])
    else:
        x, v = X, a
    r2 = v @ v
    y2 = np.sum(x * x, axis=1)
    rho = 1 - 2 * x @ v + r2 * y2
    H = -np.sum(np.log((1 - r2) * (1 - y2) / rho))
    grad_rho = -2 * x + 2 * np.outer(y2, v)
    G = np.sum(2 * v / (1 - r2) + grad_rho / rho[:, None], axis=0)
    return H, G


def oracle_decrease(model, X, v, w):
    """``H(w) - H(v)`` from the increment ``w - v``, free of cancellation.

    The plain difference of two potentials loses all digits once it drops
    below ``eps * H``; here every factor ratio is formed as ``log1p`` of a
    relative change computed from ``w - v``.
    """
    n = X.shape[0]
    dv = w - v
    if isinstance(model, BergmanBall):
        a_v, a_dv = model.from_real(v), model.from_real(dv)
        r2 = float(np.sum(np.abs(a_v) ** 2))
        dr2 = float(np.sum((np.conj(a_dv) * (2 * a_v + a_dv)).real))
        f = 1.0 - X @ np.conj(a_v)
        delta = (X @ np.conj(a_dv)) / f
        pair = np.log1p(-2 * delta.real + np.abs(delta) ** 2)
    else:
        x = np.column_stack([X.real, X.imag]) if isinstance(model, Disc) else X
        r2 = v @ v
        dr2 = dv @ (w + v)
        y2 = np.sum(x * x, axis=1)
        rho = 1 - 2 * x @ v + r2 * y2
        pair = np.log1p((-2 * x @ dv + y2 * dr2) / rho)
    return -n * math.log1p(-dr2 / (1 - r2)) + math.fsum(pair)


def armijo_barycenter(model, X, tol=1e-13, max_iter=100_000):
    """Preconditioned gradient descent with Armijo backtracking from the origin."""
    v = np.zeros(model.real_dim)
    _, G = oracle_potential_and_gradient(model, X, model.from_real(v))
    t = 1.0
    for _ in range(max_iter):
        scale = 0.25 * (1 - v @ v) ** 2
        d = -scale * G
        slope = G @ d
        if math.sqrt(-scale * slope) <= tol:
            return model.from_real(v)
        t = min(1.0, 4 * t)
        while True:
            w = v + t * d
            if w @ w < 1 and oracle_decrease(model, X, v, w) <= 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-30:
                raise RuntimeError("line search failed")
        v = w
        _, G = oracle_potential_and_gradient(model, X, model.from_real(v))
    raise RuntimeError("oracle did not converge")


def radial_mass_oracle(model, s):
    """Total mass of the origin-centered density by quadrature in u = |x|^2."""
    k = model.real_dim
    e = model.measure_exponent
    area = 2 * math.pi ** (k / 2) / math.gamma(k / 2)
    val, _ = integrate.quad(lambda u: 1.0, 0, 1, weight="alg", wvar=(k / 2 - 1, s - e))
    return math.exp(log_normalizer(model, s)) * area * 0.5 * val


def mass_by_cubature(model, s):
    """Disc only: 2-D integral over the unit disc in polar coordinates."""
    c = math.exp(log_normalizer(model, s))
    val, _ = integrate.dblquad(lambda r, th: c * (1 - r * r) ** (s - 2) * r, 0, 2 * math.pi,
                               0, 1, epsabs=1e-12, epsrel=1e-12)
    return val


# --------------------------------------------------------------------------


def test_criterion_01_barycenter_equivariance():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for model in CORE_MODELS:
        for _ in range(100):
            X = random_points(model, int(rng.integers(1, 101)), rng, 0.95)
            g = random_isometry(model, rng)
            a = barycenter(model, X).point
            b = barycenter(model, g(X)).point
            worst = max(worst, float(model.distance(b, g(a))))
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-8 and elapsed <= 60,
           f"max d(bary(gX), g bary(X)) = {worst:.2e} (tol 1e-8), {elapsed:.1f} s (limit 60 s)")


def test_criterion_02_swarm_conservation():
    rng = np.random.default_rng(202)
    worst = {}
    for model in CORE_MODELS:
        X = random_points(model, 20, rng, 0.95)
        traj = swarm_trajectory(model, X, SwarmParams(step=1e-3), 10.0, every=100)
        assert traj.times[-1] == 10.0
        worst[str(model)] = float(traj.drift.max())
    ok = max(worst.values()) <= 1e-6
    report(2, ok, "max pairwise-distance drift "
           + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (tol 1e-6)")


def test_criterion_03_gradient_flow_certificate():
    rng = np.random.default_rng(303)
    monotone, worst_identity, worst_grad = True, 0.0, 0.0
    for model in CORE_MODELS + [PoincareBall(5), BergmanBall(3)]:
        for _ in range(5):
            X = random_points(model, 20, rng, 0.95)
            # potential along a fine fixed-step path
            t, path = barycenter_flow(model, X, SwarmParams(step=1e-3, step_tol=None), t_end=4.0)
            H = np.array([potential(model, X, a) for a in path])
            monotone &= bool(np.all(np.diff(H) <= 1e-13 * max(1.0, H[0])))
            # energy balance: H(T) - H(0) against the integral of the predicted rate
            rate = np.array([dissipation_rate(model, X, a, -1.0) for a in path])
            predicted = integrate.simpson(rate, x=t)
            actual = H[-1] - H[0]
            if abs(actual) > 1e-12:
                worst_identity = max(worst_identity, abs(predicted - actual) / abs(actual))
            # pointwise: central differences of H(a(t)) at interior times with a non-negligible rate
            dH = (H[2:] - H[:-2]) / (t[2:] - t[:-2])
            mask = np.abs(rate[1:-1]) > 1e-6 * np.abs(rate).max()
            if np.any(mask):
                rel = np.abs(dH[mask] - rate[1:-1][mask]) / np.abs(rate[1:-1][mask])
                worst_identity = max(worst_identity, float(rel.max()))
            res = barycenter(model, X, SwarmParams(residual_tol=1e-12))
            g = hyp_gradient(model, X, res.point)
            worst_grad = max(worst_grad, hyperbolic_norm(model, res.point, g))
    ok = monotone and worst_identity <= 1e-4 and worst_grad <= 1e-9
    report(3, ok, f"monotone={monotone}, dissipation identity rel err {worst_identity:.1e} "
           f"(tol 1e-4), final |grad|_hyp {worst_grad:.1e} (tol 1e-9)")


@pytest.mark.slow
def test_criterion_04_armijo_oracle():
    rng = np.random.default_rng(404)
    worst = 0.0
    for model in CORE_MODELS:
        for _ in range(100):
            X = random_points(model, int(rng.integers(2, 40)), rng, 0.95)
            ours = barycenter(model, X, SwarmParams(residual_tol=1e-12)).point
            ref = armijo_barycenter(model, X)
            worst = max(worst, float(model.distance(ours, ref)))
    report(4, worst <= 1e-8, f"max distance to Armijo-descent oracle {worst:.2e} (tol 1e-8)")


def test_criterion_04_oracle_gradient_is_correct():
    # the oracle's own gradient against finite differences
    rng = np.random.default_rng(405)
    for model in CORE_MODELS:
        X = random_points(model, 10, rng)
        v = model.to_real(random_point(model, rng, 0.7))
        _, G = oracle_potential_and_gradient(model, X, model.from_real(v))
        for j in range(v.size):
            e = np.zeros(v.size)
            e[j] = 1e-6
            num = (oracle_potential_and_gradient(model, X, model.from_real(v + e))[0]
                   - oracle_potential_and_gradient(model, X, model.from_real(v - e))[0]) / 2e-6
            assert G[j] == pytest.approx(num, rel=1e-6, abs=1e-7)
        assert oracle_potential_and_gradient(model, X, model.from_real(v))[0] == pytest.approx(
            potential(model, X, model.from_real(v)), rel=1e-12)
        w = model.to_real(random_point(model, rng, 0.7))
        H = [oracle_potential_and_gradient(model, X, model.from_real(u))[0] for u in (v, w)]
        assert oracle_decrease(model, X, v, w) == pytest.approx(H[1] - H[0], rel=1e-10, abs=1e-12)


def test_criterion_05_normalization():
    cases = [(Disc(), s) for s in (1.5, 2.0, 4.0, 8.0)]
    cases += [(PoincareBall(d), d + 1.0) for d in (3, 4, 5)]
    cases += [(BergmanBall(m), m + 2.0) for m in (1, 2, 3)]
    worst = 0.0
    for model, s in cases:
        worst = max(worst, abs(radial_mass_oracle(model, s) - 1))
    for s in (2.0, 4.0, 8.0):
        worst = max(worst, abs(mass_by_cubature(Disc(), s) - 1))
    report(5, worst <= 1e-6, f"max |mass - 1| = {worst:.1e} over {len(cases)} cases (tol 1e-6)")


def test_criterion_06_sampler_ks():
    n = 100_000
    sets = [(Disc(), a, s) for a in (0j, 0.9 * np.exp(3j * np.pi / 4)) for s in (2.0, 4.0, 8.0)]
    sets += [(PoincareBall(3), np.asarray(a, float), s)
             for a in ((0, 0, 0), (0.9, 0, 0)) for s in (3.0, 5.0)]
    crit = ks_critical_1pct(n)
    worst, bad = 0.0, []
    for i, (model, a, s) in enumerate(sets):
        X = sample(MoebParams(model, a, s), n, 6000 + i)
        r = model.norm(model.involution(a, X))
        stat = stats.kstest(r, lambda b: radial_cdf(model, s, b)).statistic
        worst = max(worst, stat)
        if stat >= crit:
            bad.append(f"{model} s={s}")
    report(6, not bad, f"max KS statistic {worst:.4f} vs 1% critical {crit:.4f}; failing: {bad or 'none'}")


@pytest.mark.slow
def test_criterion_07_mle_consistency():
    sets = [(Disc(), a, s) for a in (0j, 0.9 * np.exp(3j * np.pi / 4)) for s in (2.0, 4.0, 8.0)]
    sets += [(PoincareBall(3), np.asarray(a, float), s)
             for a in ((0, 0, 0), (0.9, 0, 0)) for s in (3.0, 5.0)]
    sets += [(BergmanBall(2), np.array([0.5, 0.3j]), 4.0)]
    lines, ok = [], True
    for k, (model, a, s) in enumerate(sets):
        passes = 0
        for seed in range(20):
            X = sample(MoebParams(model, a, s), 10_000, 7000 + 100 * k + seed)
            res = fit(model, X)
            good_s = abs(res.params.s - s) <= 0.05 * s
            good_a = model.distance(res.params.a, a) <= 0.05
            passes += good_s and good_a
        ok &= passes >= 18
        lines.append(f"{passes}/20")
    # closed forms against the generic digamma solver
    gap = 0.0
    for c in np.geomspace(1e-3, 1e3, 61):
        for model in (PoincareBall(4), BergmanBall(2), BergmanBall(3)):
            closed = solve_concentration(model, c, "closed", tol=1e-15)
            generic = solve_concentration(model, c, "digamma", tol=1e-15)
            gap = max(gap, abs(closed - generic) / max(1.0, abs(generic)))
            gap = max(gap, abs(concentration_score(model, closed, "closed") - c) / max(1.0, c))
    ok &= gap <= 1e-10
    report(7, ok, f"passes per set {', '.join(lines)} (need 18/20); closed vs digamma root gap {gap:.1e} (tol 1e-10)")


def test_criterion_08_low_dimension_coincidence():
    rng = np.random.default_rng(808)
    disc, ball, berg = Disc(), PoincareBall(2), BergmanBall(1)
    worst = 0.0
    for _ in range(50):
        Z = random_points(disc, 15, rng)
        a = random_point(disc, rng)
        R = np.column_stack([Z.real, Z.imag])
        C = Z[:, None]
        ra, ca = np.array([a.real, a.imag]), np.array([a])
        dists = [disc.distance(Z, a), ball.distance(R, ra), berg.distance(C, ca)]
        worst = max(worst, np.max(np.abs(dists[0] - dists[1])), np.max(np.abs(dists[0] - dists[2])))
        pots = [potential(disc, Z, a), potential(ball, R, ra), potential(berg, C, ca)]
        worst = max(worst, abs(pots[0] - pots[1]), abs(pots[0] - pots[2]))
        b = [barycenter(disc, Z).point, barycenter(ball, R).point, barycenter(berg, C).point]
        worst = max(worst, abs(b[0] - complex(*b[1])), abs(b[0] - b[2][0]))
    # samples on shared data: the same seed drives all three samplers. Each
    # draw is checked against the common radial law (one-sample KS at 1%) and
    # the three draws against each other (two-sample KS at 1%).
    a, s, n, seed = 0.4 - 0.3j, 3.0, 50_000, 8
    ref = 0.1 + 0.5j
    Xd = sample(MoebParams(disc, a, s), n, seed)
    Xb = sample(MoebParams(ball, np.array([a.real, a.imag]), s), n, seed)
    Xg = sample(MoebParams(berg, np.array([a]), s), n, seed)
    radial = [disc.norm(disc.involution(a, Xd)),
              ball.norm(ball.involution(np.array([a.real, a.imag]), Xb)),
              berg.norm(berg.involution(np.array([a]), Xg))]
    crit = ks_critical_1pct(n)
    one_sample = max(stats.kstest(r, lambda b: radial_cdf(disc, s, b)).statistic for r in radial)
    d = [disc.distance(Xd, ref), ball.distance(Xb, np.array([ref.real, ref.imag])),
         berg.distance(Xg, np.array([ref]))]
    pvals = [stats.ks_2samp(d[0], d[1]).pvalue, stats.ks_2samp(d[0], d[2]).pvalue,
             stats.ks_2samp(d[1], d[2]).pvalue]
    ok = worst <= 1e-10 and one_sample < crit and min(pvals) > 0.01
    report(8, ok, f"max deterministic gap {worst:.1e} (tol 1e-10); radial KS {one_sample:.4f} "
           f"vs 1% critical {crit:.4f}; min two-sample KS p-value {min(pvals):.3f} (> 0.01)")


def test_criterion_09_gradient_checks():
    rng = np.random.default_rng(909)
    worst = 0.0
    models = [Disc(), PoincareBall(2), PoincareBall(3), PoincareBall(5),
              BergmanBall(1), BergmanBall(2), BergmanBall(3)]
    for model in models:
        for _ in range(100):
            X = random_points(model, int(rng.integers(1, 30)), rng, 0.95)
            a = random_point(model, rng, 0.95)
            v = model.to_real(a)
            h = 1e-5 * (1 - v @ v)
            num = np.empty(v.size)
            for j in range(v.size):
                e = np.zeros(v.size)
                e[j] = h
                # Richardson-extrapolated central difference
                c1 = (potential(model, X, model.from_real(v + e))
                      - potential(model, X, model.from_real(v - e))) / (2 * h)
                c2 = (potential(model, X, model.from_real(v + e / 2))
                      - potential(model, X, model.from_real(v - e / 2))) / h
                num[j] = (4 * c2 - c1) / 3
            expected = 0.25 * (1 - v @ v) ** 2 * num
            got = model.to_real(hyp_gradient(model, X, a))
            worst = max(worst, np.linalg.norm(got - expected) / max(np.linalg.norm(expected), 1e-300))
    report(9, worst <= 1e-6, f"max relative error {worst:.1e} over {len(models)} models x 100 points (tol 1e-6)")


CLI_RUNS = [
    ["sample", "--model", "disc", "--a=-0.6363961030678927,0.6363961030678928", "--s", "4",
     "--n", "2000", "--seed", "11"],
    ["sample", "--model", "ball", "--dim", "3", "--a", "0.9,0,0", "--s", "5", "--n", "2000",
     "--seed", "12", "--format", "csv"],
    ["sample", "--model", "bergman", "--dim", "2", "--s", "3.5", "--n", "2000", "--seed", "13"],
    ["fit", "--in", "{disc}"],
    ["barycenter", "--in", "{ball}", "--model", "ball"],
    ["swarm-trace", "--in", "{disc}", "--t-end", "0.5", "--every", "50"],
    ["density-grid", "--model", "disc", "--a", "0.3,0.2", "--s", "4", "--resolution", "60"],
]


def _cli_digests(workdir):
    digests = []
    files = {}
    for i, argv in enumerate(CLI_RUNS):
        out = workdir / f"out{i}"
        argv = [a.format(**files) for a in argv]
        proc = subprocess.run([sys.executable, "-m", "hyperball", *argv, "--out", str(out)],
                              capture_output=True)
        assert proc.returncode == 0, proc.stderr
        if i == 0:
            files["disc"] = str(out)
        if i == 1:
            files["ball"] = str(out)
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
    return digests


def test_criterion_10_cli_determinism(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    first = _cli_digests(tmp_path / "a")
    second = _cli_digests(tmp_path / "b")
    same = sum(x == y for x, y in zip(first, second))
    report(10, same == len(CLI_RUNS), f"{same}/{len(CLI_RUNS)} commands byte-identical across two runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
