"""Timed replay: compiles execution traces or authored scripts into timelines.

A script is a linear list of steps; compilation schedules them sequentially.
setSpeed scales every later declared duration (divide by factor) and costs
0 ms itself, as do navigate events. All times are integer milliseconds; the
division is done in exact rational arithmetic and rounded per step, so speed
composition and pause insertion hold exactly in integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .canon import canon_bytes, loads_strict
from .errors import EmptyTrace, MalformedDocument

ANIMATION_EXT = ".hganim.json"

STEP_KINDS = ("highlight", "traverse", "pause", "setSpeed", "annotate", "navigate", "speak")

_INSTANT = ("setSpeed", "navigate")


@dataclass(frozen=True)
class Step:
    kind: str
    duration_ms: int = 0
    node_id: str = ""
    link_id: str = ""
    text: str = ""
    factor: float = 1.0
    workspace_uri: str = ""


def highlight(node_id: str, duration_ms: int) -> Step:
    return Step("highlight", duration_ms=duration_ms, node_id=node_id)


def traverse(link_id: str, duration_ms: int) -> Step:
    return Step("traverse", duration_ms=duration_ms, link_id=link_id)


def pause(duration_ms: int) -> Step:
    return Step("pause", duration_ms=duration_ms)


def set_speed(factor: float) -> Step:
    return Step("setSpeed", factor=factor)


def annotate(node_id: str, text: str, duration_ms: int) -> Step:
    return Step("annotate", duration_ms=duration_ms, node_id=node_id, text=text)


def navigate(workspace_uri: str) -> Step:
    return Step("navigate", workspace_uri=workspace_uri)


def speak(text: str, estimated_ms: int) -> Step:
    return Step("speak", duration_ms=estimated_ms, text=text)


@dataclass(frozen=True)
class AnimationScript:
    steps: tuple = ()


@dataclass(frozen=True)
class TimelineEntry:
    at_ms: int
    event: dict


@dataclass(frozen=True)
class Timeline:
    entries: tuple = ()
    total_ms: int = 0


def check_script(script: AnimationScript) -> None:
    for i, step in enumerate(script.steps):
        if step.kind not in STEP_KINDS:
            raise MalformedDocument(f"step {i}: unknown kind {step.kind!r}")
        if step.duration_ms < 0:
            raise MalformedDocument(f"step {i}: negative duration")
        if step.kind == "setSpeed" and not step.factor > 0:
            raise MalformedDocument(f"step {i}: speed factor must be > 0")


def compile_timeline(script: AnimationScript) -> Timeline:
    """Schedule the script's steps sequentially under the running speed factor."""
    check_script(script)
    entries: list[TimelineEntry] = []
    at = 0
    factor = Fraction(1)
    for step in script.steps:
        event = _step_event(step)
        if step.kind == "setSpeed":
            factor = Fraction(step.factor)
            entries.append(TimelineEntry(at, event))
            continue
        if step.kind == "navigate":
            entries.append(TimelineEntry(at, event))
            continue
        effective = round(Fraction(step.duration_ms) / factor)
        event["effectiveMs"] = effective
        entries.append(TimelineEntry(at, event))
        at += effective
    return Timeline(entries=tuple(entries), total_ms=at)


def _step_event(step: Step) -> dict:
    event: dict[str, Any] = {"kind": step.kind}
    if step.kind in ("highlight", "annotate"):
        event["nodeId"] = step.node_id
    if step.kind == "traverse":
        event["linkId"] = step.link_id
    if step.kind in ("annotate", "speak"):
        event["text"] = step.text
    if step.kind == "setSpeed":
        event["factor"] = step.factor
    if step.kind == "navigate":
        event["workspaceUri"] = step.workspace_uri
    if step.kind not in _INSTANT:
        event["durationMs"] = step.duration_ms
    return event


def trace_to_script(trace, per_firing_ms: int) -> AnimationScript:
    """Replay script for a dataflow trace: a traverse per delivering channel,
    then a highlight per firing, in trace order."""
    if per_firing_ms <= 0:
        raise MalformedDocument("perFiringMs must be > 0")
    if not trace.events:
        raise EmptyTrace("trace has no events")
    steps: list[Step] = []
    for event in trace.events:
        for port in sorted(event.consumed_via):
            steps.append(traverse(event.consumed_via[port], per_firing_ms))
        steps.append(highlight(event.node_id, per_firing_ms))
    return AnimationScript(steps=tuple(steps))


# --- JSON form --------------------------------------------------------------------

def script_to_plain(script: AnimationScript) -> dict:
    steps = []
    for step in script.steps:
        obj: dict[str, Any] = {"kind": step.kind}
        if step.kind in ("highlight", "annotate"):
            obj["nodeId"] = step.node_id
        if step.kind == "traverse":
            obj["linkId"] = step.link_id
        if step.kind in ("annotate", "speak"):
            obj["text"] = step.text
        if step.kind == "setSpeed":
            obj["factor"] = step.factor
        elif step.kind == "navigate":
            obj["workspaceUri"] = step.workspace_uri
        elif step.kind == "speak":
            obj["estimatedMs"] = step.duration_ms
        else:
            obj["durationMs"] = step.duration_ms
        steps.append(obj)
    return {"steps": steps}


def script_from_plain(obj: Any) -> AnimationScript:
    if not isinstance(obj, dict) or not isinstance(obj.get("steps"), list):
        raise MalformedDocument("animation script must be {steps: [...]}")
    steps = []
    for i, raw in enumerate(obj["steps"]):
        if not isinstance(raw, dict) or "kind" not in raw:
            raise MalformedDocument(f"step {i}: must be an object with a kind")
        kind = raw["kind"]
        if kind not in STEP_KINDS:
            raise MalformedDocument(f"step {i}: unknown kind {kind!r}")
        duration_key = "estimatedMs" if kind == "speak" else "durationMs"
        duration = raw.get(duration_key, 0)
        if not isinstance(duration, int) or isinstance(duration, bool) or duration < 0:
            raise MalformedDocument(f"step {i}: {duration_key} must be a non-negative integer")
        steps.append(
            Step(
                kind=kind,
                duration_ms=duration,
                node_id=raw.get("nodeId", ""),
                link_id=raw.get("linkId", ""),
                text=raw.get("text", ""),
                factor=float(raw.get("factor", 1.0)),
                workspace_uri=raw.get("workspaceUri", ""),
            )
        )
    script = AnimationScript(steps=tuple(steps))
    check_script(script)
    return script


def timeline_to_plain(timeline: Timeline) -> dict:
    return {
        "entries": [{"atMs": e.at_ms, "event": e.event} for e in timeline.entries],
        "totalMs": timeline.total_ms,
    }


def serialize_script(script: AnimationScript) -> bytes:
    return canon_bytes(script_to_plain(script))


def deserialize_script(data: bytes | str) -> AnimationScript:
    try:
        obj = loads_strict(data)
    except ValueError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from exc
    return script_from_plain(obj)
