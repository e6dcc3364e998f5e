"""Straight-line reimplementations used as differential oracles.

Nothing here is cached or pruned: markers are recounted from scratch,
oracle guesses and tape extensions are enumerated in full, and use bounds
run every answer string or subset literally. The stage machines elsewhere
must agree with these bit for bit.
"""

from itertools import product

from .errors import CapExceeded
from .pairing import unpair
from .qreduce import INITIAL, SATISFIED, WAITING, WORKING, QEvent
from .spacing import BS
from .substrate import HaltingOracle, NowhereDefined
from .wtt import WttEvent


def _intervals(points):
    out = []
    for p in sorted(points):
        if out and p == out[-1][1] + 1:
            out[-1][1] = p
        else:
            out.append([p, p])
    return tuple(tuple(iv) for iv in out)


class _Abort(Exception):
    pass


# -- wtt -------------------------------------------------------------------

def naive_wtt_run(substrate, stages, horizon=32):
    removed = set()
    defeated = {}
    events = []

    def markers(k):
        out, y = [], 0
        while len(out) < k:
            if y not in removed:
                out.append(y)
            y += 1
        return out

    for s in range(stages):
        budget = s
        ms = markers(max(s + 2, horizon))
        chosen = None
        for n in range(s + 1):
            for e in range(n + 1):
                a, b = unpair(e)
                phi = substrate.functions.get(b)
                if phi is None:
                    continue
                values = []
                for k in range(n + 1):
                    out = phi.run(ms[k], budget)
                    if not out.halted:
                        break
                    values.append(out.value)
                if len(values) <= n:
                    continue
                u = max(values)
                if ms[n + 1] <= u:
                    chosen = (n, e, "action1", u, None)
                    break
                functional = substrate.functionals.get(a)
                if functional is None:
                    continue
                for bits in product("01", repeat=n):
                    alpha = "".join(bits)
                    if alpha in defeated.get((n, e), set()):
                        continue
                    ones = {ms[k] for k in range(n) if alpha[k] == "1"}
                    good = True
                    for k in range(n + 1):
                        asked = []

                        def ask(q):
                            asked.append(q)
                            return 1 if q in ones else 0

                        out = functional.run(ms[k], ask, budget)
                        if not out.halted or out.value != 1 or any(q > u for q in asked):
                            good = False
                            break
                    if good:
                        chosen = (n, e, "action2", u, alpha)
                        break
                if chosen:
                    break
            if chosen:
                break
        if chosen is None:
            events.append(WttEvent(s + 1, "no-action", budget=budget, markers=tuple(markers(horizon))))
            continue
        n, e, kind, u, alpha = chosen
        if kind == "action1":
            fresh = {y for y in range(ms[n] + 1, u + 1) if y not in removed}
            y_min, x = ms[n + 1], None
        else:
            fresh = {ms[n]}
            defeated.setdefault((n, e), set()).add(alpha)
            y_min, x = ms[n], ms[n]
        removed |= fresh
        reset = []
        for (j, i) in sorted(defeated):
            if j >= 1 and ms[j - 1] >= y_min and defeated[(j, i)]:
                defeated[(j, i)] = set()
                reset.append((j, i))
        events.append(WttEvent(s + 1, kind, pair=(n, e), u=u, y_min=y_min, removed=_intervals(fresh),
                               alpha=alpha, x=x, positions=tuple(ms[:n]) if kind == "action2" else (),
                               budget=budget, reset=tuple(reset), markers=tuple(markers(horizon))))
    return events


# -- bs / D ----------------------------------------------------------------

def _naive_bs_use(c, x, oracle, substrate):
    if c % 2 == 0:
        return 0
    a, b = unpair((c - 1) // 2)
    phi = substrate.functions.get(b, NowhereDefined())
    out = phi.run(x, oracle.budget_for(phi))
    if not out.halted:
        return 0
    k = out.value
    functional = substrate.functionals.get(a, NowhereDefined())
    best = 0
    for length in range(k + 1):
        for sigma in product((0, 1), repeat=length):
            seen = {}

            def ask(q):
                if q not in seen:
                    if len(seen) >= len(sigma):
                        raise _Abort
                    seen[q] = sigma[len(seen)]
                return seen[q]

            try:
                res = functional.run(x, ask, oracle.budget_for(functional))
            except _Abort:
                continue
            if res.halted:
                best = max([best, *seen])
    return best


def _naive_d_use(c, x, y, oracle, substrate):
    if c % 2 == 0:
        return 0, False
    functional = substrate.functionals.get((c - 1) // 2, NowhereDefined())
    best = 0
    for members in range(2 ** (y + 1)):
        asked = []

        def ask(q):
            asked.append(q)
            return (members >> q) & 1 if q <= y else 0

        res = functional.run(x, ask, oracle.budget_for(functional))
        if not res.halted:
            return 0, True
        best = max([best, *asked])
    return best, False


def _naive_attention(c, alpha_s, h, s, mode, oracle, substrate):
    if mode == BS:
        a, b = unpair((c - 1) // 2)
        phi = substrate.functions.get(b, NowhereDefined())
        caps = []
        for m in range(s + 1):
            out = phi.run(h[m], oracle.budget_for(phi))
            caps.append(out.value if out.halted else None)
    else:
        a, caps = (c - 1) // 2, [None] * (s + 1)
    functional = substrate.functionals.get(a, NowhereDefined())
    for bits in product("01", repeat=s):
        alpha = "".join(bits)
        if any(x > y for x, y in zip(alpha, alpha_s)):
            continue
        ones = {h[n] for n in range(s) if alpha[n] == "1"}
        good = True
        for m in range(s + 1):
            if mode == BS and caps[m] is None:
                good = False
                break
            want = int(alpha_s[m]) if m < s else 1
            seen = {}

            def ask(q):
                if q not in seen:
                    if caps[m] is not None and len(seen) >= caps[m]:
                        raise _Abort
                    seen[q] = 1 if q in ones else 0
                return seen[q]

            try:
                res = functional.run(h[m], ask, oracle.budget_for(functional))
            except _Abort:
                good = False
                break
            if not res.halted or res.value != want:
                good = False
                break
        if good:
            return alpha
    return None


def naive_spacing_run(substrate, stages, mode, oracle=None, h_cap=20):
    """Per-stage tuples (h(s+1), kind, acted, witness, bit, newly disabled)."""
    oracle = oracle or HaltingOracle()
    h, alpha, disabled, rows = [0], "", {}, []
    for s in range(stages):
        terms = [h[s]]
        for c in range(s + 1):
            for m in range(s + 1):
                if mode == BS:
                    terms.append(_naive_bs_use(c, h[m], oracle, substrate))
                else:
                    if c % 2 and h[s] > h_cap:
                        raise CapExceeded(f"h({s}) = {h[s]} exceeds the spacing cap {h_cap}")
                    value, dead = _naive_d_use(c, h[m], h[s], oracle, substrate)
                    terms.append(value)
                    if dead and c not in disabled:
                        disabled[c] = s + 1
        h.append(max(terms) + 1)
        size = sum(1 for n in range(s) if alpha[n] == "1")
        acted, kind, witness = None, "default", None
        n = 0
        while n <= 2 * (s + 1) or mode != BS:
            if n % 2 == 0:
                if size < n // 2:
                    acted, kind = n, "P"
                    break
            elif (n <= s if mode == BS else n < s) and n not in disabled:
                witness = _naive_attention(n, alpha, h, s, mode, oracle, substrate)
                if witness is not None:
                    acted, kind = n, "N"
                    break
            n += 1
        bit = "0" if kind == "N" else "1"
        alpha += bit
        newly = tuple(sorted(c for c, at in disabled.items() if at == s + 1))
        rows.append((h[s + 1], kind, acted, witness, bit, newly))
    return rows


# -- Q ---------------------------------------------------------------------

def naive_q_run(substrate, stages, oracle=None, horizon=256):
    oracle = oracle or HaltingOracle()

    def members(e, x):
        fam = substrate.families.get(e)
        if fam is None:
            return set()
        if oracle.budget_for(fam) is None:
            return set(fam.members(x))
        return set(fam.enumerate(x, oracle.budget))

    approx = {e for e, fam in substrate.families.items() if oracle.budget_for(fam) is not None}
    reqs = []          # dicts with keys state, tau, base, bound, witness
    sigma = ""
    events = []
    for s in range(stages):
        while len(reqs) <= s:
            reqs.append({"state": INITIAL})
        xp = s
        a_s = {z for z in range(s) if sigma[z] == "1"}
        acted = None
        violations = []
        seen_approx = False
        for e in range(s + 1):
            r = reqs[e]
            if r["state"] == SATISFIED:
                continue
            seen_approx |= e in approx
            if r["state"] == INITIAL:
                found = None
                for x in range(xp, xp + horizon):
                    spare = sorted(members(e, x) - a_s - {x})
                    if spare:
                        found = (x, spare[0])
                        break
                acted = (e, "C1", found) if found else (e, "C2", None)
                break
            if r["state"] == WAITING:
                v = members(e, xp)
                if not v <= r["base"] | {xp}:
                    violations.append(f"V_{{{e},{xp}}} = {sorted(v)} escapes D_e + {{x'}}")
                    continue
                if xp in v:
                    continue
                target = v & r["base"]
                hit = None
                for x in range(r["bound"], xp):
                    if sigma[x] == "1":
                        vx = members(e, x)
                        if x not in vx and vx & r["base"] == target:
                            hit = x
                            break
                if hit is not None:
                    acted = (e, "C3", (hit, xp))
                    break
                continue
            if r["state"] == WORKING and xp < len(r["tau"]):
                acted = (e, "C4", None)
                break
        if acted is None:
            sigma += "1"
            events.append(QEvent(s + 1, None, "default", "1", approximate=seen_approx,
                                 violations=tuple(violations)))
            continue
        e, cond, witness = acted
        r = reqs[e]
        old = r["state"]
        tau = None
        if cond == "C1":
            x, y = witness
            tau = sigma + "".join("1" if z == x else "0" for z in range(xp, max(x, y) + 1))
            bit = tau[xp]
            r.update(state=SATISFIED if len(tau) == s + 1 else WORKING, tau=tau, witness=witness)
        elif cond == "C2":
            bit = "1"
            r.update(state=WAITING, base=set(a_s), bound=xp)
        elif cond == "C3":
            bit = "0"
            r.update(state=SATISFIED)
        else:
            tau = r["tau"]
            bit = tau[xp]
            witness = r["witness"]
            if len(tau) == s + 1:
                r.update(state=SATISFIED)
        transitions = [(e, old, r["state"], cond)]
        for i in range(e + 1, len(reqs)):
            if reqs[i]["state"] != INITIAL:
                transitions.append((i, reqs[i]["state"], INITIAL, "init"))
                reqs[i] = {"state": INITIAL}
        sigma += bit
        events.append(QEvent(s + 1, e, cond, bit, witness, tau, tuple(transitions), seen_approx,
                             tuple(violations)))
    return sigma, events
