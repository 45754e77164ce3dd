"""Adaptation rules: structural rewrites, current-state mappings, atomicity."""

import random

import pytest

from adaptrv import mtl, pap
from adaptrv.errors import (
    BadIndexError,
    NameCollisionError,
    NoTimeBoundError,
    UnknownEventError,
    UnsupportedCombinationError,
    WrongPatternError,
)
from adaptrv.observer import Event, isomorphic, validate
from adaptrv.pap import (
    add_response_rule,
    apply,
    remove_response_rule,
    split_chain_rule,
    update_event_rule,
    update_time_guard_rule,
)
from adaptrv.psp import (
    Pattern,
    PatternInstance,
    ResponseTerm,
    instantiate_observer,
    parse_requirement,
    to_mtl,
)

BSN_TEXT = (
    "Between cycle_starting and cycle_ending, if request then in response "
    "thermometer_reply eventually within 2000 followed by pulse_reply within 2000"
)


def bsn():
    p = parse_requirement(BSN_TEXT)
    return instantiate_observer(p), p


def drive(obs, *pairs):
    for name, ts in pairs:
        obs.step(Event(name, ts))
    return obs


class TestUpdateTimeGuard:
    def test_all_bounds_updated(self):
        obs, p = bsn()
        out = apply(obs, p, update_time_guard_rule(3000))
        [new_p] = out.patterns
        assert [t.deadline_ms for t in new_p.responses] == [3000, 3000]
        assert all(t.guard.bound_ms == 3000 for t in out.observers[0].transitions if t.guard)

    def test_identity_update(self):
        obs, p = bsn()
        out = apply(obs, p, update_time_guard_rule(2000))
        assert out.observers[0] == obs
        assert out.patterns == [p]

    def test_single_index_update(self):
        obs, p = bsn()
        out = apply(obs, p, update_time_guard_rule(900, which=2))
        assert [t.deadline_ms for t in out.patterns[0].responses] == [2000, 900]
        fresh = instantiate_observer(out.patterns[0])
        assert isomorphic(out.observers[0], fresh)

    def test_clock_preserved(self):
        obs, p = bsn()
        drive(obs, ("cycle_starting", 0), ("request", 100))
        out = apply(obs, p, update_time_guard_rule(3000))
        assert out.observers[0].current == "waiting_1"
        assert out.observers[0].clock_reset_at == 100

    def test_recurrence_period_update(self):
        p = parse_requirement(
            "Globally, it is always the case that beat holds at least every 500"
        )
        obs = instantiate_observer(p)
        out = apply(obs, p, update_time_guard_rule(900))
        assert out.patterns[0].recurrence_period == 900
        assert isomorphic(out.observers[0], instantiate_observer(out.patterns[0]))

    def test_absence_has_no_bound(self):
        p = parse_requirement("Globally, it is never the case that a holds")
        with pytest.raises(NoTimeBoundError):
            apply(instantiate_observer(p), p, update_time_guard_rule(100))

    def test_bad_index(self):
        obs, p = bsn()
        with pytest.raises(BadIndexError):
            apply(obs, p, update_time_guard_rule(100, which=3))


class TestUpdateEvent:
    def test_trigger_rename(self):
        obs, p = bsn()
        out = apply(obs, p, update_event_rule("request", "s_request"))
        assert out.patterns[0].trigger == "s_request"
        assert "request" not in out.patterns[0].events()
        labels = {t.label for t in out.observers[0].transitions if t.label}
        assert "s_request" in labels and "request" not in labels

    def test_unknown_and_colliding_names(self):
        obs, p = bsn()
        with pytest.raises(UnknownEventError):
            apply(obs, p, update_event_rule("nope", "x"))
        with pytest.raises(NameCollisionError):
            apply(obs, p, update_event_rule("request", "pulse_reply"))

    def test_rename_and_reverse_is_identity(self):
        obs, p = bsn()
        drive(obs, ("cycle_starting", 0), ("request", 100))
        out = apply(obs, p, update_event_rule("request", "s_request"))
        back = apply(out.observers[0], out.patterns[0], update_event_rule("s_request", "request"))
        assert back.patterns == [p]
        assert isomorphic(back.observers[0], obs, match_current=True)
        assert back.observers[0].clock_reset_at == 100

    def test_scope_event_rename(self):
        obs, p = bsn()
        out = apply(obs, p, update_event_rule("cycle_ending", "cycle_closed"))
        assert out.patterns[0].scope.r == "cycle_closed"
        fresh = instantiate_observer(out.patterns[0])
        assert isomorphic(out.observers[0], fresh)


class TestAddResponse:
    def test_bsn_add_glucose(self):
        obs, p = bsn()
        out = apply(obs, p, add_response_rule("glucose_reply", 2000))
        [new_p] = out.patterns
        assert new_p.responses[-1] == ResponseTerm("glucose_reply", 2000)
        fresh = instantiate_observer(new_p)
        assert isomorphic(out.observers[0], fresh)

    def test_current_and_clock_persist(self):
        obs, p = bsn()
        drive(obs, ("cycle_starting", 0), ("request", 100), ("thermometer_reply", 600))
        assert obs.current == "waiting_2"
        out = apply(obs, p, add_response_rule("glucose_reply", 2000))
        assert out.observers[0].current == "waiting_2"
        assert out.observers[0].clock_reset_at == 600

    def test_promotes_plain_response(self):
        p = parse_requirement(
            "Between q and r, if ping then in response pong eventually within 100"
        )
        obs = instantiate_observer(p)
        out = apply(obs, p, add_response_rule("pang", 200))
        assert out.patterns[0].pattern is Pattern.RESPONSE_CHAIN
        assert isomorphic(out.observers[0], instantiate_observer(out.patterns[0]))

    def test_globally_response_cannot_grow_a_chain(self):
        p = parse_requirement("Globally, if ping then in response pong eventually within 100")
        with pytest.raises(UnsupportedCombinationError):
            apply(instantiate_observer(p), p, add_response_rule("pang", 200))

    def test_wrong_pattern_and_collision(self):
        p = parse_requirement("Globally, it is never the case that a holds")
        with pytest.raises(WrongPatternError):
            apply(instantiate_observer(p), p, add_response_rule("x", 1))
        obs, chain = bsn()
        with pytest.raises(NameCollisionError):
            apply(obs, chain, add_response_rule("pulse_reply", 10))


class TestRemoveResponse:
    def chain3(self):
        obs, p = bsn()
        out = apply(obs, p, add_response_rule("glucose_reply", 2000))
        return out.observers[0], out.patterns[0]

    def test_remove_middle(self):
        obs, p = self.chain3()
        out = apply(obs, p, remove_response_rule(2))
        assert [t.event for t in out.patterns[0].responses] == [
            "thermometer_reply",
            "glucose_reply",
        ]
        assert isomorphic(out.observers[0], instantiate_observer(out.patterns[0]))

    def test_current_moves_to_successor(self):
        obs, p = self.chain3()
        drive(obs, ("cycle_starting", 0), ("request", 100))
        assert obs.current == "waiting_1"
        out = apply(obs, p, remove_response_rule(1))
        assert out.observers[0].current == "waiting_2"
        assert out.observers[0].clock_reset_at == 100
        assert out.state_map["current"] == {"waiting_1": "waiting_2"}

    def test_remove_last_maps_to_open(self):
        obs, p = self.chain3()
        drive(
            obs,
            ("cycle_starting", 0),
            ("request", 100),
            ("thermometer_reply", 200),
            ("pulse_reply", 300),
        )
        assert obs.current == "waiting_3"
        out = apply(obs, p, remove_response_rule(3))
        assert out.observers[0].current == "open"
        assert isomorphic(out.observers[0], instantiate_observer(out.patterns[0]))

    def test_degrades_two_chain_to_response(self):
        obs, p = bsn()
        out = apply(obs, p, remove_response_rule(1))
        assert out.patterns[0].pattern is Pattern.RESPONSE
        assert isomorphic(out.observers[0], instantiate_observer(out.patterns[0]))

    def test_add_then_remove_is_identity(self):
        obs, p = bsn()
        drive(obs, ("cycle_starting", 0), ("request", 100))
        grown = apply(obs, p, add_response_rule("glucose_reply", 2000))
        back = apply(grown.observers[0], grown.patterns[0], remove_response_rule(3))
        assert back.patterns == [p]
        assert isomorphic(back.observers[0], obs, match_current=True)

    def test_bad_index_and_wrong_pattern(self):
        obs, p = bsn()
        with pytest.raises(BadIndexError):
            apply(obs, p, remove_response_rule(5))
        single = parse_requirement(
            "Between q and r, if ping then in response pong eventually within 5"
        )
        with pytest.raises(WrongPatternError):
            apply(instantiate_observer(single), single, remove_response_rule(1))


class TestSplitChain:
    def test_outputs_one_response_each(self):
        obs, p = bsn()
        out = apply(obs, p, split_chain_rule())
        assert len(out.observers) == len(p.responses) == 2
        events = [q.responses[0].event for q in out.patterns]
        assert events == ["thermometer_reply", "pulse_reply"]
        for o, q in zip(out.observers, out.patterns):
            assert isomorphic(o, instantiate_observer(q))

    def test_shared_states_map_to_themselves(self):
        obs, p = bsn()
        out = apply(obs, p, split_chain_rule())
        assert [o.current for o in out.observers] == ["closed", "closed"]

    def test_waiting_split_mapping(self):
        obs, p = bsn()
        drive(obs, ("cycle_starting", 0), ("request", 100), ("thermometer_reply", 600))
        assert obs.current == "waiting_2"
        out = apply(obs, p, split_chain_rule())
        assert [o.current for o in out.observers] == ["open", "waiting_1"]
        assert out.observers[1].clock_reset_at == 600
        assert out.observers[0].clock_reset_at is None

    def test_error_persists_through_split(self):
        obs, p = bsn()
        drive(obs, ("cycle_starting", 0), ("request", 100), ("cycle_ending", 150))
        assert obs.violated
        out = apply(obs, p, split_chain_rule())
        assert all(o.current == "error" for o in out.observers)

    def test_wrong_pattern(self):
        p = parse_requirement("Globally, it is never the case that a holds")
        with pytest.raises(WrongPatternError):
            apply(instantiate_observer(p), p, split_chain_rule())


class TestTableIISequence:
    """The published requirements-change scenario, end to end."""

    def test_five_adaptations(self):
        obs, p = bsn()
        drive(obs, ("cycle_starting", 0), ("request", 100), ("thermometer_reply", 600))

        # 1: add the glucometer
        out = apply(obs, p, add_response_rule("glucose_reply", 2000))
        obs, p = out.observers[0], out.patterns[0]
        assert obs.current == "waiting_2"
        assert [t.event for t in p.responses] == [
            "thermometer_reply",
            "pulse_reply",
            "glucose_reply",
        ]

        # 2: relax every window to 3 s
        out = apply(obs, p, update_time_guard_rule(3000))
        obs, p = out.observers[0], out.patterns[0]
        assert obs.current == "waiting_2"
        assert {t.deadline_ms for t in p.responses} == {3000}

        # a cycle completes and a new one begins
        drive(
            obs,
            ("pulse_reply", 1000),
            ("glucose_reply", 1500),
            ("cycle_ending", 2000),
            ("cycle_starting", 2500),
            ("request", 2600),
        )
        assert obs.current == "waiting_1"

        # 3: drop the thermometer while its response is owed
        out = apply(obs, p, remove_response_rule(1))
        obs, p = out.observers[0], out.patterns[0]
        assert obs.current == "waiting_2"
        assert obs.clock_reset_at == 2600
        assert [t.event for t in p.responses] == ["pulse_reply", "glucose_reply"]

        # 4: the scheduler takes over the requests
        out = apply(obs, p, update_event_rule("request", "s_request"))
        obs, p = out.observers[0], out.patterns[0]
        assert obs.current == "waiting_2"
        assert p.trigger == "s_request"

        # the first remaining response arrives
        drive(obs, ("pulse_reply", 2700))

        # 5: sensor order stops mattering
        out = apply(obs, p, split_chain_rule())
        assert [o.current for o in out.observers] == ["open", "waiting_1"]
        assert [q.responses[0].event for q in out.patterns] == ["pulse_reply", "glucose_reply"]
        for o, q in zip(out.observers, out.patterns):
            assert isomorphic(o, instantiate_observer(q))
        rendered = [mtl.render(to_mtl(q)) for q in out.patterns]
        assert rendered[0] == (
            "□((cycle_starting ∧ ◊cycle_ending) → ((s_request → "
            "(¬cycle_ending U[0,3000] pulse_reply)) U cycle_ending))"
        )


class TestFuzzedAlternation:
    def test_long_alternation_stays_isomorphic_to_redeployment(self):
        rng = random.Random(12)
        obs, p = bsn()
        redeploy_p = p
        aux = 0
        for step in range(300):
            mode = step % 3
            if mode == 0:
                aux += 1
                rule = add_response_rule(f"extra_{aux}", rng.choice([500, 1000, 2000]))
            elif mode == 1:
                rule = remove_response_rule(len(p.responses))  # the one just added
            else:
                old = p.responses[-1].event
                rule = update_event_rule(old, old + "_r") if not old.endswith("_r") else (
                    update_event_rule(old, old[:-2])
                )
            out = apply(obs, p, rule)
            obs, p = out.observers[0], out.patterns[0]
            assert validate(obs) == []
            redeploy_p = pap.apply_to_pattern(redeploy_p, rule)[0]
            assert p == redeploy_p
            assert isomorphic(obs, instantiate_observer(redeploy_p)), f"step {step}"
