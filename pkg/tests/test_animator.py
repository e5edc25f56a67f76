import random
from fractions import Fraction

import pytest

from hgos.animator import (
    AnimationScript,
    annotate,
    compile_timeline,
    deserialize_script,
    highlight,
    navigate,
    pause,
    serialize_script,
    set_speed,
    speak,
    trace_to_script,
    traverse,
)
from hgos.dataflow import build_dataflow, run
from hgos.dsl import builtin_dataflow
from hgos.errors import EmptyTrace, MalformedDocument

from conftest import chain_ws, counter_ws

FACTORS = (0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0)


def script_of(*steps) -> AnimationScript:
    return AnimationScript(steps=tuple(steps))


# --- compileTimeline -------------------------------------------------------------

def test_total_is_sum():
    timeline = compile_timeline(script_of(highlight("a", 1000), pause(500)))
    assert timeline.total_ms == 1500
    assert [e.at_ms for e in timeline.entries] == [0, 1000]


def test_set_speed_scales_following_steps():
    timeline = compile_timeline(script_of(set_speed(2.0), highlight("a", 1000)))
    assert timeline.total_ms == 500
    assert timeline.entries[1].event["effectiveMs"] == 500


def test_empty_script():
    timeline = compile_timeline(script_of())
    assert timeline.total_ms == 0
    assert timeline.entries == ()


def test_navigate_and_set_speed_are_instant():
    timeline = compile_timeline(
        script_of(navigate("ws/a"), set_speed(4.0), speak("hello", 400), annotate("n", "hi", 100))
    )
    assert [e.at_ms for e in timeline.entries] == [0, 0, 0, 100]
    assert timeline.total_ms == 125


def test_rejects_bad_factor():
    with pytest.raises(MalformedDocument):
        compile_timeline(script_of(set_speed(0.0)))


def random_script(rng: random.Random) -> AnimationScript:
    steps = []
    for _ in range(rng.randint(0, 14)):
        kind = rng.random()
        d = rng.randint(0, 3000)
        if kind < 0.3:
            steps.append(highlight(f"n{rng.randint(0, 9)}", d))
        elif kind < 0.45:
            steps.append(traverse(f"l{rng.randint(0, 9)}", d))
        elif kind < 0.6:
            steps.append(pause(d))
        elif kind < 0.75:
            steps.append(set_speed(rng.choice(FACTORS)))
        elif kind < 0.85:
            steps.append(annotate(f"n{rng.randint(0, 9)}", "note", d))
        elif kind < 0.95:
            steps.append(speak("text", d))
        else:
            steps.append(navigate(f"ws/{rng.randint(0, 5)}"))
    return script_of(*steps)


def hand_total(script: AnimationScript) -> int:
    # independent accumulation: per-step rounded division in exact rationals
    factor = Fraction(1)
    total = 0
    for step in script.steps:
        if step.kind == "setSpeed":
            factor = Fraction(step.factor)
            continue
        if step.kind == "navigate":
            continue
        total += round(Fraction(step.duration_ms) / factor)
    return total


def test_random_scripts_match_hand_computed_totals():
    for seed in range(80):
        script = random_script(random.Random(seed))
        assert compile_timeline(script).total_ms == hand_total(script), seed


def test_pause_insertion_linearity():
    for seed in range(60):
        rng = random.Random(500 + seed)
        script = random_script(rng)
        where = rng.randint(0, len(script.steps))
        extra = rng.randint(0, 2000)
        factor = Fraction(1)
        for step in script.steps[:where]:
            if step.kind == "setSpeed":
                factor = Fraction(step.factor)
        inserted = script_of(*script.steps[:where], pause(extra), *script.steps[where:])
        base = compile_timeline(script).total_ms
        grown = compile_timeline(inserted).total_ms
        assert grown - base == round(Fraction(extra) / factor), seed


def test_speed_composition():
    # doubling every duration equals halving a leading speed factor
    for seed in range(60):
        rng = random.Random(900 + seed)
        base_factor = rng.choice(FACTORS)
        steps = [
            (rng.choice(("highlight", "pause")), rng.randint(0, 3000)) for _ in range(rng.randint(1, 10))
        ]

        def build(factor, scale):
            out = [set_speed(factor)]
            for kind, d in steps:
                out.append(highlight("n", d * scale) if kind == "highlight" else pause(d * scale))
            return script_of(*out)

        doubled = compile_timeline(build(base_factor, 2))
        halved = compile_timeline(build(base_factor / 2, 1))
        assert doubled.total_ms == halved.total_ms, seed
        assert [e.at_ms for e in doubled.entries] == [e.at_ms for e in halved.entries], seed


def test_determinism():
    script = random_script(random.Random(77))
    assert compile_timeline(script) == compile_timeline(script)


# --- traceToScript ------------------------------------------------------------------

def test_trace_to_script_chain():
    graph = build_dataflow(chain_ws(), builtin_dataflow())
    _, trace = run(graph, limits={"maxTicks": 10})
    script = trace_to_script(trace, 500)
    kinds = [(s.kind, s.node_id or s.link_id) for s in script.steps]
    # two source firings, then the sum consuming over both channels
    assert kinds == [
        ("highlight", "c1"),
        ("highlight", "c2"),
        ("traverse", "l1"),
        ("traverse", "l2"),
        ("highlight", "sum"),
    ]
    assert all(s.duration_ms == 500 for s in script.steps)


def test_trace_to_script_counter_repeats_cycle():
    graph = build_dataflow(counter_ws(), builtin_dataflow())
    _, trace = run(graph, limits={"maxTicks": 5})
    script = trace_to_script(trace, 100)
    kinds = [(s.kind, s.node_id or s.link_id) for s in script.steps]
    assert kinds == [("traverse", "loop"), ("highlight", "acc")] * 5


def test_empty_trace_rejected():
    graph = build_dataflow(chain_ws(), builtin_dataflow())
    _, trace = run(graph, limits={"maxTicks": 10})
    empty = type(trace)(run_id="r", events=(), terminal="completed")
    with pytest.raises(EmptyTrace):
        trace_to_script(empty, 100)


def test_script_json_round_trip():
    script = random_script(random.Random(5))
    data = serialize_script(script)
    assert deserialize_script(data) == script
    assert serialize_script(deserialize_script(data)) == data
