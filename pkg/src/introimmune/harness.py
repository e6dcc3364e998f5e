"""Adversary packs, construction runners, trace round-trips and differential checks."""

from collections import Counter
from dataclasses import dataclass, field, replace

from . import trace as tr
from .errors import CapExceeded
from .manifest import Manifest, builtin_pack_paths, load_manifest
from .naive import naive_q_run, naive_spacing_run, naive_wtt_run
from .qreduce import QEvent, QRequirement, q_run, q_stage, q_verify
from .spacing import SpacingEvent, SpacingRun, SpacingState, spacing_run, spacing_stage, verify_spacing
from .substrate import HaltingOracle
from .wtt import (CofiniteSet, WttEvent, WttState, extraction_counts, verify_wtt, wtt_run,
                  wtt_stage)

DEFAULT_CONFIG = {"oracle_mode": "exact", "budget": 10_000, "horizon": 32, "h_cap": 20,
                  "q_horizon": 256, "seed": 0}
STAGE_CAPS = {"wtt": 10_000, "bs": 40, "d": 16, "q": 10_000}
CROSS_CHECK_CAPS = {"wtt": 200, "q": 200, "bs": 18, "d": 14}
Q_HORIZON_CAP = 10_000


@dataclass
class AdversaryPack:
    name: str
    construction: str
    manifest: Manifest
    description: str = ""

    @property
    def substrate(self):
        return self.manifest.substrate

    @property
    def expect(self):
        return self.manifest.expect


def builtin_adversaries(construction=None):
    packs = []
    for path in builtin_pack_paths():
        m = load_manifest(path)
        if m.construction and (construction is None or m.construction == construction):
            packs.append(AdversaryPack(m.name, m.construction, m, m.description))
    return packs


def pack_by_name(name):
    for pack in builtin_adversaries():
        if pack.name == name:
            return pack
    raise KeyError(f"no builtin pack named {name!r}")


def builtin_manifest(name):
    for path in builtin_pack_paths():
        if path.name == f"{name}.yaml":
            return load_manifest(path)
    raise KeyError(f"no builtin manifest named {name!r}")


# -- running ----------------------------------------------------------------

def _config(config):
    merged = dict(DEFAULT_CONFIG)
    merged.update(config or {})
    return merged


def _oracle(config):
    return HaltingOracle(config["oracle_mode"], config["budget"])


@dataclass
class RunResult:
    construction: str
    stages: int
    run: object
    records: list
    oracle: HaltingOracle | None = None


def run_construction(construction, substrate, stages, config=None, pack="<manifest>", stage_fn=None,
                     max_stages=None):
    """Run a construction and package the trace records (header, events, final)."""
    config = _config(config)
    if construction not in STAGE_CAPS:
        raise ValueError(f"unknown construction {construction!r}")
    if stages < 0:
        raise ValueError("stages must be a natural number")
    cap = STAGE_CAPS[construction] if max_stages is None else max_stages
    if stages > cap:
        raise CapExceeded(f"{stages} stages exceeds the {construction} cap {cap}")
    oracle = None
    if construction == "wtt":
        run = wtt_run(substrate, stages, horizon=config["horizon"], stage_fn=stage_fn)
        events = [ev.to_record() for ev in run.events]
        fin = {"removed": [list(iv) for iv in run.state.removed.removed_intervals()],
               "defeated": [[n, e, alphas] for (n, e), alphas in run.state.defeated_sorted().items()],
               "markers": list(run.state.removed.markers(config["horizon"])),
               "approximate": False}
    elif construction in ("bs", "d"):
        oracle = _oracle(config)
        run = spacing_run(substrate, stages, construction, oracle, config["h_cap"], stage_fn=stage_fn)
        events = [ev.to_record() for ev in run.events]
        fin = {"alpha": run.alpha, "h": run.state.h,
               "disabled": [[c, at] for c, at in sorted(run.state.disabled.items())],
               "approximate": run.approximate, "halting": dict(sorted(oracle.tally.items()))}
    elif construction == "q":
        if config["q_horizon"] > Q_HORIZON_CAP:
            raise CapExceeded(f"Q search horizon {config['q_horizon']} exceeds {Q_HORIZON_CAP}")
        oracle = _oracle(config)
        run = q_run(substrate, stages, oracle, config["q_horizon"], stage_fn=stage_fn)
        events = [ev.to_record() for ev in run.events]
        fin = {"sigma": run.sigma, "states": [r.to_dict() for r in run.states],
               "approximate": any(ev.approximate for ev in run.events),
               "halting": dict(sorted(oracle.tally.items()))}
    else:
        raise ValueError(f"unknown construction {construction!r}")
    records = [tr.header(construction, pack, stages, config), *events, tr.final(stages, fin)]
    return RunResult(construction, stages, run, records, oracle)


def run_pack(pack: AdversaryPack, stages, config=None, stage_fn=None):
    return run_construction(pack.construction, pack.substrate, stages, config, pack.name, stage_fn)


# -- verifying traces --------------------------------------------------------

def verify_records(info, events, fin, substrate):
    """Every invariant that applies to the trace's construction; returns violation strings."""
    construction = info["construction"]
    config = _config(info.get("config"))
    try:
        if construction == "wtt":
            evs = [WttEvent.from_record(r) for r in events]
            state = WttState(CofiniteSet(tuple(iv) for iv in fin["removed"]),
                             {(n, e): set(alphas) for n, e, alphas in fin["defeated"]})
            problems = verify_wtt(evs, state, substrate, horizon=config["horizon"])
            if evs and len(evs[0].markers) > 4:
                history = [tuple(range(config["horizon"]))] + [ev.markers for ev in evs]
                for n, changes, bound in extraction_counts(history):
                    if changes > bound:
                        problems.append(f"marker {n} changed {changes} times after settling, bound {bound}")
            return problems
        if construction in ("bs", "d"):
            evs = [SpacingEvent.from_record(r) for r in events]
            state = SpacingState(construction, h=list(fin["h"]),
                                 disabled={c: at for c, at in fin["disabled"]})
            run = SpacingRun(construction, fin["alpha"], state, evs)
            problems = verify_spacing(run, substrate, _oracle(config))
            recorded = {}
            for ev in evs:
                for c in ev.disabled:
                    recorded.setdefault(c, ev.stage)
            if recorded != state.disabled:
                problems.append("disabled requirements in the final record disagree with the events")
            if bool(fin.get("approximate")) != run.approximate:
                problems.append("approximation banner disagrees with the per-stage oracle tags")
            return problems
        evs = [QEvent.from_record(r) for r in events]
        states = [QRequirement.from_dict(d) for d in fin["states"]]
        problems = q_verify(evs, states, fin["sigma"], substrate, _oracle(config))
        if bool(fin.get("approximate")) != any(ev.approximate for ev in evs):
            problems.append("approximation banner disagrees with the per-stage oracle tags")
        return problems
    except (KeyError, TypeError, ValueError) as err:
        raise tr.TraceSchemaError(f"malformed {construction} payload: {err!r}") from None


# -- expectations and differential checks ------------------------------------

def event_kinds(construction, records):
    counts = Counter()
    for rec in records:
        counts[rec["kind"]] += 1
        if construction == "d" and rec["payload"].get("disabled"):
            counts["disabled"] += 1
    return counts


def check_expectation(pack: AdversaryPack, records):
    """(ok, detail) for the pack's expected-outcome descriptor."""
    events = [r for r in records if r["kind"] not in ("header", "final")]
    expect = pack.expect
    within = expect.get("within", len(events))
    if len(events) < within:
        return False, f"only {len(events)} stages run, expectation needs {within}"
    early = event_kinds(pack.construction, events[:within])
    total = event_kinds(pack.construction, events)
    missing = {k: n for k, n in expect.get("kinds", {}).items() if early[k] < n}
    present = [k for k in expect.get("absent", []) if total[k]]
    if missing or present:
        return False, f"within {within} stages: short of {missing}, unexpected {present}"
    return True, f"within {within} stages: {dict(sorted(early.items()))}"


@dataclass
class OracleReport:
    construction: str
    pack: str
    stages: int
    results: list = field(default_factory=list)     # (invariant id, passed, witness)

    @property
    def ok(self):
        return all(passed for _, passed, _ in self.results)

    def add(self, name, problems):
        problems = list(problems)
        self.results.append((name, not problems, problems[0] if problems else ""))

    def lines(self):
        return [f"{'PASS' if ok else 'FAIL'} {self.construction}/{self.pack} {name}"
                + (f": {witness}" if witness else "") for name, ok, witness in self.results]


def _first_difference(main, naive):
    for i, (x, y) in enumerate(zip(main, naive)):
        if x != y:
            return [f"first difference at stage {i + 1}: main {x} vs naive {y}"]
    if len(main) != len(naive):
        return [f"lengths differ: {len(main)} vs {len(naive)}"]
    return []


def mutated_stage(construction):
    """A deliberately broken stage machine, for negative controls."""
    if construction == "wtt":
        def stage(state, s, substrate, budget, horizon, phis):
            return wtt_stage(state, s, substrate, budget + 1, horizon, phis)
        return stage
    if construction in ("bs", "d"):
        def stage(alpha, state, s, oracle, substrate):
            alpha, n, kind, witness = spacing_stage(alpha, state, s, oracle, substrate)
            if s == 2:
                alpha = alpha[:-1] + ("1" if alpha[-1] == "0" else "0")
            return alpha, n, kind, witness
        return stage

    def stage(states, sigma, s, view):
        states, sigma, event = q_stage(states, sigma, s, view)
        if event.condition == "C2":
            sigma = sigma[:-1] + "0"
            event = replace(event, bit="0")
        return states, sigma, event
    return stage


def cross_check(construction, stages, pack: AdversaryPack, fault=False, config=None):
    """Main stage machine against the naive one, then every module invariant."""
    if stages > CROSS_CHECK_CAPS[construction]:
        raise CapExceeded(f"cross-check refuses {stages} {construction} stages "
                          f"(cap {CROSS_CHECK_CAPS[construction]})")
    config = _config(config)
    stage_fn = mutated_stage(construction) if fault else None
    result = run_pack(pack, stages, config, stage_fn)
    report = OracleReport(construction, pack.name, stages)
    sub = pack.substrate
    events = result.records[1:-1]
    if construction == "wtt":
        naive = [ev.to_record() for ev in naive_wtt_run(sub, stages, config["horizon"])]
        report.add("naive-agreement", _first_difference(events, naive))
    elif construction in ("bs", "d"):
        main = [(ev.h, ev.kind, ev.acted, ev.witness, ev.bit, ev.disabled) for ev in result.run.events]
        naive = naive_spacing_run(sub, stages, construction, _oracle(config), config["h_cap"])
        report.add("naive-agreement", _first_difference(main, naive))
    else:
        _, naive_events = naive_q_run(sub, stages, _oracle(config), config["q_horizon"])
        report.add("naive-agreement", _first_difference(events, [ev.to_record() for ev in naive_events]))
    info = result.records[0]["payload"]
    report.add("module-invariants", verify_records(info, events, result.records[-1]["payload"], sub))
    if stages >= pack.expect.get("within", 0):
        ok, detail = check_expectation(pack, result.records)
        report.add("expected-outcome", [] if ok else [detail])
    return report
