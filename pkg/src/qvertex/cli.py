"""Batch verification harness and operator dumps.

Every check is written as one JSON object per line, followed by a summary
object.  Exit status: 0 when every check passed, 1 on a check failure, 2 on a
usage or configuration error.

Examples::

    qvertex --suite X-identity
    qvertex --suite drinfeld --level 4 --modes 2 --module 2L0
    qvertex --suite typeI --level 3 --z-order 3 --out report.jsonl
    qvertex --dump x+0 --module 2L0 --level 2
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import currents, fock, omega, vertex
from .scalars import ONE, ZERO, Scalar, X_coeff, expand_poch_ratio, qpow, verify_X_identity

SUITES = (
    "X-identity",
    "exchange",
    "module",
    "drinfeld",
    "omega",
    "typeI",
    "typeII-half",
    "typeII-spin1",
    "homogeneity",
    "normalization",
    "numeric",
)
DEFAULT_SUITES = SUITES[:-1]
MODULE_TAGS = tuple(fock.MODULES)

DEFAULTS = {
    "level": 3,
    "modes": 2,
    "z_order": 3,
    "w_order": 2,
    "omega_order": 6,
    "series_order": 8,
    "max_index": 5,
    "suite": None,
    "module": None,
    "out": None,
    "numeric_q": None,
    "fail_fast": False,
    "jobs": 1,
    "timing": True,
    "dump": None,
    "tilde": False,
}

COMPONENT_IDS = {
    "Phi1": ("I", Fraction(1, 2), 1),
    "Phi0": ("I", Fraction(1, 2), 0),
    "Psi0": ("II", Fraction(1, 2), 0),
    "Psi1": ("II", Fraction(1, 2), 1),
    "Psi0s1": ("II", Fraction(1), 0),
    "Psi1s1": ("II", Fraction(1), 1),
    "Psi2s1": ("II", Fraction(1), 2),
}


class UsageError(ValueError):
    pass


# -- serialization ---------------------------------------------------------------


def scalar_json(c):
    return list(Scalar.coerce(c).serialize())


def state_json(st):
    bos, ferm, m = st
    return {"bosons": list(bos), "fermions": [str(Fraction(f, 2)) for f in ferm], "charge": m}


def _jsonable(x):
    if isinstance(x, Scalar):
        return scalar_json(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(y) for y in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (int, float, str, bool)) or x is None:
        return x
    return repr(x)


def _record(suite, check, ok, checked=None, failures=(), **extra):
    rec = {"type": "check", "suite": suite, "check": check, "ok": bool(ok)}
    if checked is not None:
        rec["checked"] = checked
    failures = list(failures)
    rec["n_failures"] = len(failures)
    rec["failures"] = [_jsonable(f) for f in failures[:20]]
    rec.update({k: _jsonable(v) for k, v in extra.items()})
    return rec


def _from_check_result(suite, cr):
    d = cr.as_dict()
    d = {"type": "check", "suite": suite, "module": d.pop("source"), **d}
    d["check"] = cr.name
    return d


# -- suites ----------------------------------------------------------------------


def suite_x_identity(cfg):
    n_max = cfg["series_order"]
    fails = []
    count = 0
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            if n + m == 0:
                continue
            count += 1
            if not verify_X_identity(n, m):
                fails.append({"n": n, "m": m})
    return [_record("X-identity", f"finite sum = X_(m,n), n,m <= {n_max}", not fails, count, fails)]


def suite_exchange(cfg):
    N = cfg["series_order"]
    _, results = currents.verify_exchange_relations(N, details=True)
    return [
        _record("exchange", name, ok, N + 1, [{"order": k} for k in bad])
        for name, ok, bad in results
    ]


def suite_module(cfg):
    out = []
    for tag in cfg["module"]:
        ok, fails = fock.verify_module(tag, cfg["level"], details=True)
        dims = fock.character_dimensions(tag, cfg["level"])
        out.append(
            _record(
                "module",
                "mode algebra, parity, grading and character",
                ok,
                len(fock.module_basis(tag, cfg["level"])),
                [{"check": c, "detail": d} for c, d in fails],
                module=tag,
                dimensions=dims,
            )
        )
    return out


def suite_drinfeld(cfg):
    out = []
    for tag in cfg["module"]:
        ok, fails = currents.verify_drinfeld(tag, cfg["level"], cfg["modes"], details=True)
        out.append(
            _record(
                "drinfeld",
                f"Drinfeld relations |k| <= {cfg['modes']}",
                ok,
                len(fock.module_basis(tag, cfg["level"])),
                [{"relation": r, "indices": i, "state": state_json(s)} for r, i, s in fails],
                module=tag,
            )
        )
    return out


def suite_omega(cfg):
    out = []
    N = cfg["max_index"]
    ok, fails = omega.verify_two_point(N, details=True)
    out.append(_record("omega", f"two-point values, indices <= {N}", ok, None, fails))
    ok, fails, count = omega.verify_wick(details=True)
    out.append(_record("omega", "multi-mode elements = Pfaffians", ok, count, fails))
    for direction in omega.DIRECTIONS:
        ok, fails, checked = omega.verify_omega_intertwining(direction, cfg["omega_order"], details=True)
        out.append(
            _record("omega", f"fermion intertwining {direction}, order {cfg['omega_order']}", ok, checked, fails)
        )
    ok, fails = omega.verify_auxiliary_annihilation(cfg["omega_order"], details=True)
    out.append(_record("omega", "auxiliary annihilation", ok, None, fails))
    return out


def suite_type_i(cfg):
    L, Z, tags = cfg["level"], cfg["z_order"], cfg["module"]
    res = vertex.compare_phi0_routes(L, Z, tags)
    res += vertex.verify_intertwining_typeI(L, Z, cfg["w_order"], cfg["modes"], tags)
    return [_from_check_result("typeI", r) for r in res]


def suite_type_ii_half(cfg):
    res = vertex.verify_intertwining_typeII_half(cfg["level"], cfg["z_order"], cfg["module"])
    return [_from_check_result("typeII-half", r) for r in res]


def suite_type_ii_spin1(cfg):
    res = vertex.verify_intertwining_spin1(cfg["level"], cfg["z_order"], cfg["module"])
    return [_from_check_result("typeII-spin1", r) for r in res]


def suite_homogeneity(cfg):
    res = vertex.verify_homogeneity(cfg["level"], cfg["z_order"], cfg["module"])
    return [_from_check_result("homogeneity", r) for r in res]


def suite_normalization(cfg):
    out = []
    for entry in vertex.normalization_audit():
        entry = dict(entry)
        ok = entry.pop("ok")
        name = entry.pop("element")
        out.append(_record("normalization", name, ok, 1, [] if ok else [entry], **entry))
    return out


def _fpoch(x, base, n):
    acc = 1.0
    for k in range(n):
        acc *= 1.0 - x * base**k
    return acc


def _fseries_mul(a, b, N):
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(N + 1)]


def numeric_pairs(qv, cfg):
    """Pairs ``(label, float value, exact Scalar)``.

    The float side redoes a computation in floating arithmetic from the same
    formula (sums, series exponentials, infinite products, operator
    combinations); the exact side is the canonical Scalar evaluated at ``q``.
    """
    x = float(qv)
    pairs = []
    t, t2 = x**2, x**4
    for n in range(5):
        for m in range(5):
            if n + m == 0:
                continue
            total = 1.0
            pref = (1 - 1 / t) * (1 + t ** (2 * n))
            for j in range(1, m + 1):
                r1 = _fpoch(t ** (1 + 2 * n), t2, j - 1) / _fpoch(t ** (2 + 2 * n), t2, j - 1)
                r2 = _fpoch(t ** (2 * m - 2 * j + 2), t2, j) / _fpoch(t ** (2 * m - 2 * j + 1), t2, j)
                total += pref * r1 * r2 * t**j / (1 - t ** (2 * (n + j)))
            pairs.append((f"X sum n={n} m={m}", total, X_coeff(m, n)))
    N = min(cfg["series_order"], 8)
    for f in currents.EXCHANGE_RELATIONS:
        g = [0.0] + [
            (f.left.coeff(k) * f.right.coeff(k) * fock.boson_bracket(k)).evaluate(x) for k in range(1, N + 1)
        ]
        e = [1.0 + 0j] + [0j] * N
        for k in range(1, N + 1):
            e[k] = sum(g[j] * j * e[k - j] for j in range(1, k + 1)) / k
        for k, want in enumerate(f.closed_form(N)):
            pairs.append((f"exchange {f.name} order {k}", e[k], want))
    if x < 1:
        # (a u; q^4)_inf / (b u; q^4)_inf as truncated float products
        for ea, eb in ((1, -1), (-3, -1), (5, 7), (9, 7)):
            a_, b_ = x**ea, x**eb
            num = [1.0] + [0.0] * N
            den = [1.0] + [0.0] * N
            for k in range(400):
                c = t2**k
                num = [num[i] - (a_ * c * num[i - 1] if i else 0.0) for i in range(N + 1)]
                geo = [(b_ * c) ** i for i in range(N + 1)]
                den = _fseries_mul(den, geo, N)
            prod = _fseries_mul(num, den, N)
            exact = expand_poch_ratio(qpow(ea), qpow(eb), N).coeffs
            for k in range(N + 1):
                pairs.append((f"poch ratio q^{ea}/q^{eb} order {k}", prod[k], exact[k]))
    # Phi_0 from Phi_1 x^-_0 - q x^-_0 Phi_1, combined in floats
    phi1 = lambda v, Z: vertex.apply_component(COMPONENT_IDS["Phi1"], v, Z)
    xm0 = lambda u: currents.x_mode(-1, 0, u)
    for st in fock.module_basis("2L0", 1):
        v = {st: ONE}
        before = phi1(xm0(v), 1)
        after = {e: xm0(vec) for e, vec in phi1(v, 1).items()}
        closed = vertex.apply_component(COMPONENT_IDS["Phi0"], v, 1)
        for e, vec in closed.items():
            for s, c in vec.items():
                if fock.energy(s) > 1:
                    continue
                val = before.get(e, {}).get(s, ZERO).evaluate(x) - x * after.get(e, {}).get(s, ZERO).evaluate(x)
                pairs.append((f"Phi0 routes {st} z^{e}", val, c))
    return pairs


def suite_numeric(cfg):
    qv = cfg["numeric_q"] if cfg["numeric_q"] is not None else Fraction(3, 5)
    x = float(qv)
    fails = []
    worst = 0.0
    pairs = numeric_pairs(qv, cfg)
    for label, val, exact in pairs:
        ve = Scalar.coerce(exact).evaluate(x)
        err = abs(val - ve) / max(1.0, abs(ve))
        worst = max(worst, err)
        if err > 1e-12:
            fails.append({"pair": label, "float": repr(val), "exact": repr(ve)})
    return [
        _record("numeric", f"float recomputation agrees with exact values at q = {qv}", not fails, len(pairs),
                fails, max_relative_error=worst)
    ]


SUITE_FUNCS = {
    "X-identity": suite_x_identity,
    "exchange": suite_exchange,
    "module": suite_module,
    "drinfeld": suite_drinfeld,
    "omega": suite_omega,
    "typeI": suite_type_i,
    "typeII-half": suite_type_ii_half,
    "typeII-spin1": suite_type_ii_spin1,
    "homogeneity": suite_homogeneity,
    "normalization": suite_normalization,
    "numeric": suite_numeric,
}


def _run_one(suite, cfg):
    t0 = time.perf_counter()
    recs = SUITE_FUNCS[suite](cfg)
    dt = time.perf_counter() - t0
    if cfg["timing"]:
        recs.append({"type": "timing", "suite": suite, "seconds": round(dt, 3)})
    return recs


def run_suite(cfg, stream) -> int:
    """Run the configured suites, writing JSON lines to ``stream``; returns the exit status."""
    suites = cfg["suite"]
    results = {}
    aborted = False
    if cfg["jobs"] > 1 and len(suites) > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            futures = {s: pool.submit(_run_one, s, cfg) for s in suites}
            for s in suites:
                results[s] = futures[s].result()
                if cfg["fail_fast"] and not _all_ok(results[s]):
                    aborted = True
                    for f in futures.values():
                        f.cancel()
                    break
    else:
        for s in suites:
            results[s] = _run_one(s, cfg)
            if cfg["fail_fast"] and not _all_ok(results[s]):
                aborted = True
                break
    n_checks = n_failed = 0
    for s in suites:
        for rec in results.get(s, ()):
            if rec["type"] == "check":
                n_checks += 1
                n_failed += not rec["ok"]
            stream.write(json.dumps(rec, sort_keys=True) + "\n")
    ok = n_failed == 0 and not aborted
    summary = {
        "type": "summary",
        "ok": ok,
        "checks": n_checks,
        "failed": n_failed,
        "suites": [s for s in suites if s in results],
        "aborted": aborted,
        "config": _jsonable({k: v for k, v in cfg.items() if k not in ("out", "dump")}),
    }
    stream.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0 if ok else 1


def _all_ok(recs):
    return all(r["ok"] for r in recs if r["type"] == "check")


# -- operator dumps ------------------------------------------------------------


def _normalizer(comp, source, target):
    """Prefactor ``(Scalar, z-exponent)`` of the normalized operator ``source -> target``.

    All components of one operator share the prefactor, so any listed element
    with the same kind, spin and module pair fixes it.
    """
    comp = vertex.Component(*comp)
    for _, c, src, tgt, pref in vertex.NORMALIZATIONS:
        c = vertex.Component(*c)
        if (src, tgt) == (source, target) and (c.kind, c.spin) == (comp.kind, comp.spin):
            return pref.scalar(), pref.b
    raise UsageError(f"no normalization listed for {comp} from {source} to {target}")


def _mode_op(op_id):
    m = re.fullmatch(r"x([+-])(-?\d+)", op_id)
    if m:
        sign = 1 if m.group(1) == "+" else -1
        k = int(m.group(2))
        return lambda v: {Fraction(0): currents.x_mode(sign, k, v)}
    m = re.fullmatch(r"a(-?\d+)", op_id)
    if m:
        k = int(m.group(1))
        if k == 0:
            raise UsageError("a0 is not a mode of the Heisenberg algebra")
        return lambda v: {Fraction(0): currents.a_mode(k, v)}
    if op_id == "K":
        return lambda v: {Fraction(0): currents.K_op(v)}
    return None


def dump_operator(cfg, op_id, stream) -> int:
    """Exact matrix of an operator between enumerated bases, one entry per line."""
    if op_id == "omega-2pt":
        N = cfg["max_index"]
        count = 0
        for direction in omega.DIRECTIONS:
            for n in range(N + 1):
                for m in range(N + 1):
                    val = omega.two_point_closed_form(direction, "RR", n, m)
                    stream.write(
                        json.dumps(
                            {"type": "entry", "operator": op_id, "direction": direction, "n": n, "m": m,
                             "value": scalar_json(val)},
                            sort_keys=True,
                        )
                        + "\n"
                    )
                    count += 1
        stream.write(json.dumps({"type": "summary", "ok": True, "entries": count}) + "\n")
        return 0
    tag = cfg["module"][0]
    op = _mode_op(op_id)
    comp = None
    if op is None:
        if op_id not in COMPONENT_IDS:
            raise UsageError(f"unknown operator {op_id!r}")
        comp = COMPONENT_IDS[op_id]
        op = lambda v: vertex.apply_component(comp, v, cfg["z_order"])
    elif cfg["tilde"]:
        raise UsageError("--tilde applies to vertex operator components only")
    tilde = cfg["tilde"] and comp is not None
    count = 0
    for st in fock.module_basis(tag, cfg["level"]):
        try:
            img = op({st: ONE})
        except vertex.ClosedFormError as exc:
            raise UsageError(str(exc)) from None
        for e in sorted(img):
            vec = img[e]
            for s in sorted(vec, key=lambda x: (fock.module_of(x), fock._state_key(x))):
                c, ze = vec[s], e
                if tilde:
                    k, kz = _normalizer(comp, tag, fock.module_of(s))
                    c, ze = c * k, e + kz
                rec = {
                    "type": "entry",
                    "operator": op_id + ("~" if tilde else ""),
                    "module": tag,
                    "column": state_json(st),
                    "row": state_json(s),
                    "row_module": fock.module_of(s),
                    "z": str(ze),
                    "value": scalar_json(c),
                }
                stream.write(json.dumps(rec, sort_keys=True) + "\n")
                count += 1
    stream.write(json.dumps({"type": "summary", "ok": True, "entries": count}) + "\n")
    return 0


# -- configuration ------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="qvertex", description="Exact verification of level-two vertex operators.")
    p.add_argument("--config", help="JSON file with any of the options below (flags override it)")
    p.add_argument("--level", type=int, help="energy level of source states (default 3)")
    p.add_argument("--modes", type=int, help="mode window |k| for Drinfeld relations and boson modes (default 2)")
    p.add_argument("--z-order", dest="z_order", type=int, help="energy level of target states (default 3)")
    p.add_argument("--w-order", dest="w_order", type=int, help="mode window of the x^+(w) conditions (default 2)")
    p.add_argument("--omega-order", dest="omega_order", type=int, help="order of the fermion intertwining check (default 6)")
    p.add_argument("--series-order", dest="series_order", type=int, help="order of series identities (default 8)")
    p.add_argument("--max-index", dest="max_index", type=int, help="index bound of two-point tables (default 5)")
    p.add_argument("--suite", action="append", choices=SUITES + ("all",), help="suite to run; repeatable")
    p.add_argument("--module", action="append", choices=MODULE_TAGS, help="module tag; repeatable (default all)")
    p.add_argument("--out", help="report path (default stdout)")
    p.add_argument("--numeric-q", dest="numeric_q", help="rational q for the numeric cross-check, e.g. 3/5")
    p.add_argument("--fail-fast", dest="fail_fast", action="store_true", default=None)
    p.add_argument("--jobs", type=int, help="worker processes for suites (default 1)")
    p.add_argument("--no-timing", dest="timing", action="store_false", default=None,
                   help="omit timing records, making reports byte-for-byte reproducible")
    p.add_argument("--dump", metavar="OPERATOR",
                   help="dump an operator: x+K, x-K, aK, K, Phi1, Phi0, Psi0, Psi1, Psi0s1, Psi1s1, Psi2s1, omega-2pt")
    p.add_argument("--tilde", action="store_true", default=None, help="with --dump, apply the normalization prefactor")
    return p


def _parse_q(x):
    try:
        v = Fraction(str(x))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--numeric-q must be a rational number, got {x!r}") from None
    if v <= 0 or v == 1:
        raise UsageError("--numeric-q must be positive and different from 1")
    return v


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        for k, v in data.items():
            key = k.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {k!r}")
            cfg[key] = v
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    for k in ("level", "modes", "z_order", "w_order", "omega_order", "series_order", "max_index", "jobs"):
        if not isinstance(cfg[k], int) or cfg[k] < 0:
            raise UsageError(f"{k} must be a nonnegative integer")
    if cfg["jobs"] < 1:
        raise UsageError("jobs must be at least 1")
    suites = cfg["suite"]
    if suites is None:
        suites = list(DEFAULT_SUITES) + (["numeric"] if cfg["numeric_q"] is not None else [])
    elif isinstance(suites, str):
        suites = [suites]
    if "all" in suites:
        suites = list(SUITES)
    bad = [s for s in suites if s not in SUITES]
    if bad:
        raise UsageError(f"unknown suites {bad}")
    cfg["suite"] = list(dict.fromkeys(suites))
    mods = cfg["module"]
    if mods is None:
        mods = list(MODULE_TAGS)
    elif isinstance(mods, str):
        mods = [mods]
    bad = [m for m in mods if m not in MODULE_TAGS]
    if bad:
        raise UsageError(f"unknown modules {bad}")
    cfg["module"] = list(dict.fromkeys(mods))
    if cfg["numeric_q"] is not None:
        cfg["numeric_q"] = _parse_q(cfg["numeric_q"])
    cfg["fail_fast"] = bool(cfg["fail_fast"])
    cfg["timing"] = bool(cfg["timing"])
    cfg["tilde"] = bool(cfg["tilde"])
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        stream = open(cfg["out"], "w") if cfg["out"] else sys.stdout
    except (UsageError, OSError) as exc:
        print(f"qvertex: error: {exc}", file=sys.stderr)
        return 2
    try:
        if cfg["dump"]:
            return dump_operator(cfg, cfg["dump"], stream)
        return run_suite(cfg, stream)
    except UsageError as exc:
        print(f"qvertex: error: {exc}", file=sys.stderr)
        return 2
    finally:
        if stream is not sys.stdout:
            stream.close()


if __name__ == "__main__":
    sys.exit(main())
