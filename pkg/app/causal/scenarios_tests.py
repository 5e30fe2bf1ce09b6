import pytest

from app.backends.structures import BackendName
from app.causal.checker import check_causal_delivery, check_pair_order
from app.causal.scenarios import Scenario, Verdict, run_scenario
from app.clock import ClockValue
from app.sim import Trace


BACKENDS = [BackendName.QUORUM, BackendName.ATTESTED]


def clock_of(result, payload):
    return ClockValue.from_json_obj(result.clocks[payload])


@pytest.mark.unit
@pytest.mark.parametrize('backend', BACKENDS)
def test_motivating_example(backend):
    result, trace = run_scenario(Scenario.MOTIVATING, backend)

    assert clock_of(result, 'm1') == ClockValue.of({'P1': 1})
    assert clock_of(result, 'm2') == ClockValue.of({'P1': 2})
    assert clock_of(result, 'm3') == ClockValue.of({'P1': 2, 'P2': 1})
    assert result.victim_delivered == ['m3']
    assert result.victim_discarded == {'m1': 'stale'}
    assert result.verdict is Verdict.ORDER_KEPT
    assert result.passed


@pytest.mark.unit
@pytest.mark.parametrize('backend', BACKENDS)
@pytest.mark.parametrize(
    'scenario, verdict',
    [
        (Scenario.ERRONEOUS_CLOCK, Verdict.REJECTED_BY_VERIFY),
        (Scenario.CHERRY_PICK, Verdict.REJECTED_BY_VERIFY),
        (Scenario.STALE_BASE, Verdict.REJECTED_STALE_BASE),
    ],
)
def test_attacks_fail(backend, scenario, verdict):
    result, trace = run_scenario(scenario, backend)
    assert result.verdict is verdict
    assert result.passed
    assert 'm1' in result.victim_delivered or result.victim_discarded.get('m1') == 'stale'


@pytest.mark.unit
def test_erroneous_clock_is_the_scripted_value():
    result, trace = run_scenario(Scenario.ERRONEOUS_CLOCK)
    forged = trace.notes('forge')[0].fields['clock']
    assert ClockValue.from_json_obj(forged) == ClockValue.of({'P2': 2, 'P3': 3})
    assert result.victim_discarded['m3'] == 'invalid-proof'
    assert result.victim_delivered == ['m1']


@pytest.mark.unit
def test_cherry_picked_clock_is_concurrent_with_m1():
    result, trace = run_scenario(Scenario.CHERRY_PICK)
    forged = ClockValue.from_json_obj(trace.notes('forge')[0].fields['clock'])
    m1 = clock_of(result, 'm1')
    assert forged['P3'] < m1['P3']
    assert forged['P1'] > m1['P1']


@pytest.mark.unit
@pytest.mark.parametrize('backend', BACKENDS)
def test_stale_base_fork_succeeds_without_mono(backend):
    result, _ = run_scenario(Scenario.STALE_BASE, backend, mono=False)
    assert result.verdict is Verdict.MISORDERED
    assert result.victim_delivered == ['m3', 'm1']
    assert not result.passed


@pytest.mark.unit
@pytest.mark.parametrize(
    'scenario', [Scenario.ERRONEOUS_CLOCK, Scenario.STALE_BASE]
)
def test_attacks_succeed_against_unsafe_backend(scenario):
    result, _ = run_scenario(scenario, BackendName.NONE, mono=False)
    assert result.verdict is Verdict.MISORDERED


@pytest.mark.unit
def test_scenarios_are_deterministic():
    _, first = run_scenario(Scenario.CHERRY_PICK, seed=4)
    _, second = run_scenario(Scenario.CHERRY_PICK, seed=4)
    assert first.dumps() == second.dumps()


@pytest.mark.unit
def test_checkers_flag_a_corrupted_trace():
    _, trace = run_scenario(Scenario.MOTIVATING)
    events = list(trace.events)
    stale = next(n for n in trace.notes('discard') if n.fields['payload'] == 'm1')
    delivered = stale.model_copy(
        update={'name': 'deliver', 'fields': {**stale.fields, 'src': 'P1'}}
    )
    events[events.index(stale)] = delivered
    corrupted = Trace(events)

    assert [v.seq for v in check_pair_order(corrupted, 'P3', 'm1', 'm3')] == [stale.seq]
    assert [v.seq for v in check_causal_delivery(corrupted, ['P3'])] == [stale.seq]
