"""One pass/fail line per acceptance criterion, printed under 'acceptance criteria'."""

import json
import time
from itertools import combinations, permutations, product

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, ENGINE_CONFIGS
from greedylab.cli import main
from greedylab.constants import (est_consec_unc, est_consecutive_greedy, est_Kb, est_Ksu,
                                 est_superdemocracy, est_suppression_qg, est_truncation_qg,
                                 evaluate_witness)
from greedylab.core import Vec
from greedylab.corpus import Corpus, build_corpus
from greedylab.greedy import GreedyQuery, is_pseudo_greedy, is_tau_greedy, pseudo_greedy_as_difference
from greedylab.norms import make_engine
from greedylab.oracles import A_p, D_con_m, D_m, eta_p, sigma_con_m, sigma_m, sigma_tilde_m
from greedylab.verify import (KNOWN_COUNTEREXAMPLES, check_1propA_scaling, check_m1_iii, check_m3,
                              check_sqs_implications)

LP1 = make_engine({"norm": "lp", "q": 1})
ISUP = make_engine({"norm": "interval_sup"})


def record(ok: bool, name: str, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def corpus6():
    return build_corpus(dim=6)


def test_counterexample_reproduction():
    t0 = time.perf_counter()
    n1 = ISUP.norm(Vec({1: 3, 2: -1, 3: 3}))
    n2 = ISUP.norm(Vec({1: 3, 3: 3}))
    c = Corpus.of([Vec({1: 3, 2: -1, 3: 3})])
    cu = est_consec_unc(ISUP, c)
    m3 = check_m3(ISUP, c, expected_failures=KNOWN_COUNTEREXAMPLES["interval_sup"])
    dt = time.perf_counter() - t0
    exp = m3.expected_failures[0] if m3.expected_failures else {}
    ok = (abs(n1 - 5) <= 1e-12 and abs(n2 - 6) <= 1e-12 and cu.value >= 1.2 - 1e-12
          and cu.witness["I"] == [2] and abs(evaluate_witness(ISUP, cu) - 1.2) <= 1e-12
          and exp.get("reproduced") is True and m3.clauses["consec_unc"]["status"] == "fail"
          and m3.passed and dt < 1.0)
    record(ok, "counterexample reproduction",
           f"norms {n1:g}, {n2:g}; ConsecUnc >= {cu.value:.12g} at I={cu.witness['I']}; "
           f"m3 expected failure reproduced={exp.get('reproduced')} ratio={exp.get('ratio')}; {dt:.2f}s")


def test_unit_constant_suite(corpus6):
    t0 = time.perf_counter()
    ests = [est_Kb(LP1, corpus6), est_Ksu(LP1, corpus6), est_superdemocracy(LP1, 6),
            est_suppression_qg(LP1, corpus6, 1.0), est_truncation_qg(LP1, corpus6),
            est_consecutive_greedy(LP1, corpus6, 1.0)]
    dt = time.perf_counter() - t0
    bad = [e.name for e in ests
           if abs(e.value - 1) > 1e-9 or e.witness is None
           or abs(evaluate_witness(LP1, e) - 1) > 1e-9]
    record(not bad and dt < 120, "unit-constant suite on lp(1)",
           ", ".join(f"{e.name}={e.value:.12g}" for e in ests) + f"; off={bad}; {dt:.1f}s")


def test_m1_iii_bound(corpus6):
    t0 = time.perf_counter()
    reps = {tau: check_m1_iii(LP1, corpus6, tau, max_support=3) for tau in (1.0, 0.5)}
    dt = time.perf_counter() - t0
    p1 = {tau: r.constants["bounds"]["p1"] for tau, r in reps.items()}
    ok = (abs(p1[1.0] - 11) <= 1e-12 and abs(p1[0.5] - 13) <= 1e-12
          and all(r.passed and r.kind == "theorem" for r in reps.values()) and dt < 300)
    record(ok, "m1 iii) bound on lp(1)",
           f"Bound={p1[1.0]:g} (tau=1), {p1[0.5]:g} (tau=0.5); "
           + "; ".join(f"tau={t:g}: {r.status}, {r.instances_tested} instances, "
                       f"worst slack {r.worst_slack:.3g}" for t, r in reps.items())
           + f"; {dt:.1f}s")


@pytest.mark.parametrize("tau", [1.0, 0.5])
def test_m1_iii_observed_ratio(corpus6, tau):
    r = check_m1_iii(LP1, corpus6, tau, max_support=3)
    detail = f"tau={tau:g}: worst observed ratio {r.worst_ratio:.12g} (required <= 1+1e-9)"
    if r.worst_ratio > 1 + 1e-9:
        x = np.array([2.0, 1.0])
        detail += (f"; e.g. x=(2,1), Lambda={{2}} is {tau:g}-greedy, I={{1}}: "
                   f"{LP1.norm(x * [1, 0]):g}/{LP1.norm(x * [0, 1]):g}")
    record(r.worst_ratio <= 1 + 1e-9, "m1 iii) observed ratio on lp(1)", detail)


def _eta_brute(p, u, n=10**6):
    t = (np.arange(n) + 0.5) / n
    s = t / (A_p(p) * u)
    return float(((1 - t**p) ** (-1 / p) * (1 - (1 + s) ** (-p)) ** (-1 / p)).min())


def test_eta_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for p in (0.25, 0.5, 0.75):
        for u in (0.5, 1.0, 2.0, 5.0):
            b = _eta_brute(p, u)
            worst = max(worst, abs(eta_p(p, u) - b) / b)
    dt = time.perf_counter() - t0
    record(worst <= 1e-6 and dt < 10, "eta_p oracle",
           f"max relative gap to 1e6-point grid {worst:.3g}; {dt:.2f}s")


WINDOW, M_MAX = 8, 4
CHAIN = (("sigma", "sigma_tilde"), ("sigma", "sigma_con"), ("sigma_con", "D_con"),
         ("sigma", "D"), ("D", "D_con"))
FUNCS = {"sigma": sigma_m, "sigma_tilde": sigma_tilde_m, "sigma_con": sigma_con_m,
         "D": D_m, "D_con": D_con_m}


@pytest.fixture(scope="module")
def functional_table():
    """{engine: list over corpus vectors of [m][functional]} on a fixed window.

    Vectors come from a dim-4 corpus padded to a window of 8, so the window
    is at least |support| + m for every m <= 4.
    """
    corpus = build_corpus(dim=4, structured_budget=128, n_random=16)
    out = {}
    for name, cfg in sorted(ENGINE_CONFIGS.items()):
        e = make_engine(cfg)
        rows = []
        for x in corpus:
            x = x.with_dim(WINDOW)
            rows.append((x, [{k: f(e, x, m) for k, f in FUNCS.items()} for m in range(M_MAX + 1)]))
        out[name] = rows
    return out


def _rel(a, b):
    return (b - a) / max(abs(a), abs(b), 1e-300)


def test_error_functional_chain(functional_table):
    worst, where = np.inf, None
    for name, rows in functional_table.items():
        for x, vals in rows:
            for m, v in enumerate(vals):
                for a, b in CHAIN:
                    s = 0.0 if abs(v[b] - v[a]) <= 1e-12 else _rel(v[a], v[b])
                    if s < worst:
                        worst, where = s, (name, x.to_json(), m, a, b)
    record(worst >= -1e-9, "error-functional ordering chain",
           f"{len(functional_table)} engines, worst slack {worst:.3g} at {where}")


@pytest.mark.parametrize("func", list(FUNCS))
def test_error_functional_monotone(functional_table, func):
    worst, where = np.inf, None
    for name, rows in functional_table.items():
        for x, vals in rows:
            for m in range(M_MAX):
                a, b = vals[m + 1][func], vals[m][func]
                s = 0.0 if abs(b - a) <= 1e-12 else _rel(a, b)
                if s < worst:
                    worst, where = s, (name, x.to_json(), m)
    detail = f"{func} nonincreasing in m: worst slack {worst:.3g}"
    if worst < -1e-9:
        detail += f" at (engine, x, m)={where}"
    record(worst >= -1e-9, "error-functional monotonicity", detail)


def test_pseudo_greedy_characterization():
    t0 = time.perf_counter()
    alphabet = (0.0, 1.0, 2.0, 3.0, 5.0)
    checked = bad = 0
    for d in range(1, 7):
        # d = 6 needs a repeated modulus, so the distinct family is empty there
        for mods in permutations(alphabet, d):
            for signs in product((1.0, -1.0), repeat=d):
                x = Vec({i + 1: s * v for i, (v, s) in enumerate(zip(mods, signs))}, dim=d)
                for k in range(d + 1):
                    for A in combinations(range(1, d + 1), k):
                        checked += 1
                        pair = pseudo_greedy_as_difference(x, A)
                        ok = pair is not None
                        if ok:
                            g1, g2 = pair
                            ok = (set(g1) <= set(g2) and set(g2) - set(g1) == set(A)
                                  and is_tau_greedy(GreedyQuery(x, len(g1)), g1)
                                  and is_tau_greedy(GreedyQuery(x, len(g2)), g2))
                        bad += ok != is_pseudo_greedy(x, A)
    dt = time.perf_counter() - t0
    record(bad == 0 and dt < 120, "pseudo-greedy characterization",
           f"{checked} (x, A) pairs, {bad} discrepancies; {dt:.1f}s")


def test_1propA_scaling(corpus6):
    r = check_1propA_scaling(LP1, corpus6)
    record(r.passed and r.kind == "theorem", "1-Property (A) scaling on lp(1)",
           f"{r.instances_tested} instances, worst slack {r.worst_slack:.3g}")


def test_sqs_chain(corpus6):
    parts, ok = [], True
    for cfg in ({"norm": "lp", "q": 1}, {"norm": "weighted_lp", "q": 1, "weights": [1] * 6},
                {"norm": "sup"}):
        r = check_sqs_implications(make_engine(cfg), corpus6)
        c = r.constants["C_sqs"]["value"]
        b = r.constants["bound_i_ii"]
        ok &= r.passed and abs(c - 1) <= 1e-9 and abs(b - 5) <= 1e-9
        parts.append(f"{r.engine}: C_sqs={c:g}, bound={b:g}, {r.status}")
    record(ok, "squeeze-symmetry chain", "; ".join(parts))


def test_determinism(tmp_path):
    def run(name):
        out = tmp_path / name
        rc = main(["check", "--dim", "4", "--seed", "3", "--tau", "1", "--tau", "0.5",
                   "--out", str(out)])
        return rc, (out / "report.json").read_bytes()
    (rc1, a), (rc2, b) = run("a"), run("b")
    n = len(json.loads(a))
    record(a == b and rc1 == rc2, "determinism", f"{n} reports, byte-identical={a == b}")
