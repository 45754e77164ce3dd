"""Verification loop: queueing, filtering, timers, quiescent adaptation."""

import random

import pytest

from adaptrv.engine import (
    MonitorSession,
    ProcessResult,
    Verdict,
    run_virtual,
    verify_trace,
)
from adaptrv.errors import TimeRegressionError, WrongPatternError
from adaptrv.observer import Event
from adaptrv.oracle import evaluate_pattern
from adaptrv.pap import add_response_rule, split_chain_rule, update_time_guard_rule
from adaptrv.psp import parse_requirement, random_instance
from adaptrv.tracegen import SATISFYING, VIOLATING, generate

BSN_TEXT = (
    "Between cycle_starting and cycle_ending, if request then in response "
    "thermometer_reply eventually within 2000 followed by pulse_reply within 2000"
)


def bsn_session(**kw) -> MonitorSession:
    return MonitorSession.for_pattern(parse_requirement(BSN_TEXT), **kw)


def feed(session, *pairs):
    for name, ts in pairs:
        session.submit_event(Event(name, ts))


class TestSubmit:
    def test_relevant_event_enqueued(self):
        s = bsn_session()
        feed(s, ("cycle_starting", 0))
        assert len(s.queue) == 1

    def test_irrelevant_event_dropped_but_attests_time(self):
        s = bsn_session()
        feed(s, ("battery_low", 5))
        assert len(s.queue) == 0
        assert s.last_submitted == 5

    def test_fifo_order_at_equal_timestamps(self):
        s = bsn_session()
        feed(s, ("cycle_starting", 7), ("request", 7))
        assert s.process_next() is ProcessResult.STEPPED
        assert s.observers[0].current == "open"
        assert s.process_next() is ProcessResult.STEPPED
        assert s.observers[0].current == "waiting_1"

    def test_time_regression_rejected(self):
        s = bsn_session()
        feed(s, ("cycle_starting", 10))
        with pytest.raises(TimeRegressionError):
            feed(s, ("request", 9))


class TestProcessNext:
    def test_narrative_run_sets_timer(self):
        s = bsn_session()
        feed(s, ("cycle_starting", 0), ("request", 100))
        assert s.process_next() is ProcessResult.STEPPED
        assert s.observers[0].current == "open"
        assert s.process_next() is ProcessResult.STEPPED
        assert s.observers[0].current == "waiting_1"
        assert s.pending_timer == 2101

    def test_timer_discarded_on_state_change(self):
        s = bsn_session()
        feed(s, ("cycle_starting", 0), ("request", 100), ("thermometer_reply", 600))
        s.run_until_idle()
        assert s.observers[0].current == "waiting_2"
        assert s.pending_timer == 2601  # re-armed for the next window, not 2101

    def test_timer_fires_before_later_event(self):
        hits = []
        s = bsn_session(sink=lambda sid, prop, ts: hits.append(ts))
        feed(s, ("cycle_starting", 0), ("request", 100))
        s.run_until_idle()
        feed(s, ("cycle_starting", 5000))
        results = []
        while (r := s.process_next()) is not ProcessResult.IDLE:
            results.append(r)
        assert results[0] is ProcessResult.VIOLATION_DETECTED
        assert s.verdict is Verdict.VIOLATED
        assert s.first_violation == 2101
        assert hits == [2101]

    def test_idle_on_empty_queue(self):
        assert bsn_session().process_next() is ProcessResult.IDLE

    def test_violation_notified_exactly_once(self):
        hits = []
        s = bsn_session(sink=lambda sid, prop, ts: hits.append((sid, ts)))
        feed(s, ("cycle_starting", 0), ("request", 100), ("hum", 9000))
        s.run_until_idle()
        feed(s, ("cycle_starting", 9500), ("request", 9600), ("hum", 30000))
        s.run_until_idle()
        assert s.verdict is Verdict.VIOLATED
        assert hits == [("0", 2101)]


class TestAdaptationQueueing:
    def test_queued_events_use_the_old_observer(self):
        s = bsn_session()
        feed(s, ("cycle_starting", 0), ("request", 100), ("thermometer_reply", 600))
        s.request_adaptation(add_response_rule("glucose_reply", 2000))
        seen = []
        while (r := s.process_next()) is not ProcessResult.IDLE:
            seen.append((r, tuple(o.current for o in s.observers)))
        assert seen[:3] == [
            (ProcessResult.STEPPED, ("open",)),
            (ProcessResult.STEPPED, ("waiting_1",)),
            (ProcessResult.STEPPED, ("waiting_2",)),
        ]
        assert seen[3][0] is ProcessResult.ADAPTED
        assert seen[3][1] == ("waiting_2",)  # current persists through adaptation
        assert len(s.patterns[0].responses) == 3

    def test_adaptation_on_empty_queue_applies_immediately(self):
        s = bsn_session()
        s.request_adaptation(add_response_rule("glucose_reply", 2000))
        assert s.process_next() is ProcessResult.ADAPTED

    def test_two_adaptations_apply_in_order(self):
        import adaptrv.pap as pap

        s = bsn_session()
        r1 = add_response_rule("glucose_reply", 2000)
        r2 = update_time_guard_rule(3000)
        s.request_adaptation(r1)
        s.request_adaptation(r2)
        s.run_until_idle()

        p = parse_requirement(BSN_TEXT)
        offline = pap.apply_to_pattern(p, r1)[0]
        offline = pap.apply_to_pattern(offline, r2)[0]
        assert s.patterns == [offline]

    def test_failed_adaptation_leaves_session_intact(self):
        s = MonitorSession.for_pattern(
            parse_requirement("Globally, it is never the case that a holds")
        )
        s.request_adaptation(split_chain_rule())
        before = s.observers[0].copy()
        with pytest.raises(WrongPatternError):
            s.process_next()
        assert s.observers[0] == before
        assert len(s.queue) == 0

    def test_guard_shrink_can_violate_at_recheck(self):
        s = bsn_session()
        feed(s, ("cycle_starting", 0), ("request", 100), ("hum", 1500))
        s.run_until_idle()
        assert s.observers[0].current == "waiting_1"  # valuation 1400 at now=1500
        s.request_adaptation(update_time_guard_rule(1000))
        assert s.process_next() is ProcessResult.VIOLATION_DETECTED
        assert s.verdict is Verdict.VIOLATED
        assert s.first_violation == 1500

    def test_event_rename_updates_the_filter(self):
        from adaptrv.pap import update_event_rule

        s = bsn_session()
        s.request_adaptation(update_event_rule("request", "s_request"))
        s.run_until_idle()
        assert "s_request" in s.relevant and "request" not in s.relevant
        feed(s, ("request", 10))  # now irrelevant: dropped
        assert len(s.queue) == 0
        feed(s, ("s_request", 20))
        assert len(s.queue) == 1

    def test_split_shares_the_queue(self):
        s = bsn_session()
        feed(s, ("cycle_starting", 0), ("request", 100), ("thermometer_reply", 600))
        s.run_until_idle()
        s.request_adaptation(split_chain_rule())
        s.run_until_idle()
        assert [o.current for o in s.observers] == ["open", "waiting_1"]
        # one event now drives both observers
        feed(s, ("pulse_reply", 700))
        s.run_until_idle()
        assert [o.current for o in s.observers] == ["open", "open"]


class TestQuiescenceProperty:
    def test_prefix_equivalence_with_queued_adaptation(self):
        rng = random.Random(99)
        pattern = parse_requirement(BSN_TEXT)
        for seed in range(20):
            t = generate(pattern, SATISFYING if seed % 2 else VIOLATING, seed, 40)
            cut = rng.randint(1, len(t))
            prefix = t[:cut]

            plain = MonitorSession.for_pattern(pattern)
            for ev in prefix:
                plain.submit_event(ev)
            while plain.queue:
                plain.process_next()

            adapted = MonitorSession.for_pattern(pattern)
            for ev in prefix:
                adapted.submit_event(ev)
            adapted.request_adaptation(update_time_guard_rule(3000))
            while adapted.queue and adapted.queue[0].kind.value != "adaptation":
                adapted.process_next()

            summary = lambda s: [(e.kind, e.detail, e.states, e.verdict) for e in s.history]
            assert summary(adapted) == summary(plain), f"seed {seed}"
            assert [o.current for o in adapted.observers] == [
                o.current for o in plain.observers
            ], f"seed {seed}"
            assert adapted.verdict is plain.verdict, f"seed {seed}"


class TestRunVirtual:
    def test_satisfying_trace_runs_clean(self):
        p = parse_requirement(BSN_TEXT)
        t = generate(p, SATISFYING, seed=3, approx_length=60)
        assert verify_trace(p, t).verdict is Verdict.RUNNING

    def test_violating_trace_matches_oracle_position(self):
        p = parse_requirement(BSN_TEXT)
        for seed in range(10):
            t = generate(p, VIOLATING, seed=seed, approx_length=60)
            result = verify_trace(p, t)
            expected = evaluate_pattern(p, t)
            assert result.verdict is Verdict.VIOLATED
            assert expected.violated
            assert result.first_violation == expected.at

    def test_empty_trace(self):
        p = parse_requirement(BSN_TEXT)
        assert verify_trace(p, []).verdict is Verdict.RUNNING

    def test_filtering_soundness(self):
        p = parse_requirement(BSN_TEXT)
        for seed in range(15):
            t = generate(p, VIOLATING if seed % 2 else SATISFYING, seed, 50)
            relevant = p.events()
            filtered = [e for e in t if e.event_type in relevant]
            full = MonitorSession.for_pattern(p)
            run_virtual(full, t)
            pre = MonitorSession.for_pattern(p)
            run_virtual(pre, filtered)
            if full.verdict is pre.verdict:
                assert full.first_violation == pre.first_violation
            else:
                # pre-filtering can only lag on knowledge of time: the violation
                # must already be armed at exactly the instant the full run saw
                assert full.verdict is Verdict.VIOLATED
                assert pre.verdict is Verdict.RUNNING
                assert pre.pending_timer == full.first_violation

    def test_offline_online_equivalence(self):
        p = parse_requirement(BSN_TEXT)
        for seed in range(10):
            t = generate(p, VIOLATING if seed % 2 else SATISFYING, seed, 50)
            offline = verify_trace(p, t)
            online = MonitorSession.for_pattern(p)
            for e in t:
                online.submit_event(e)
                if seed % 3 == 0:
                    online.run_until_idle()
            online.run_until_idle()
            assert online.verdict is offline.verdict
            assert online.first_violation == offline.first_violation


class TestTimerSufficiency:
    def test_extra_time_advances_never_change_the_verdict(self):
        rng = random.Random(17)
        for case in range(60):
            p = random_instance(rng)
            label = VIOLATING if case % 2 else SATISFYING
            try:
                t = generate(p, label, seed=case, approx_length=30)
            except Exception:
                continue
            baseline = verify_trace(p, t)

            from adaptrv.psp import instantiate_observer

            obs = instantiate_observer(p)
            verdict_at = None
            now = 0
            for e in t:
                # arbitrary extra advances between events, plus the armed instants
                for _ in range(rng.randint(0, 3)):
                    probe = now + rng.randint(0, max(1, (e.timestamp - now)))
                    probe = min(probe, e.timestamp)
                    armed = obs.next_timer()
                    if armed is not None and armed <= probe:
                        r = obs.advance_time(armed)
                        if r.entered_error and verdict_at is None:
                            verdict_at = armed
                    r = obs.advance_time(probe)
                    if r.entered_error and verdict_at is None:
                        verdict_at = probe
                    now = probe
                armed = obs.next_timer()
                if armed is not None and armed < e.timestamp:
                    r = obs.advance_time(armed)
                    if r.entered_error and verdict_at is None:
                        verdict_at = armed
                obs.step(e)
                now = e.timestamp
                if obs.violated and verdict_at is None:
                    verdict_at = e.timestamp
            armed = obs.next_timer()
            if armed is not None and armed <= now:
                r = obs.advance_time(max(armed, now))
                if r.entered_error and verdict_at is None:
                    verdict_at = armed
            assert obs.violated == (baseline.verdict is Verdict.VIOLATED), f"case {case}"
            if obs.violated:
                assert verdict_at == baseline.first_violation, f"case {case}"
