"""Deterministic dataflow execution over workspaces using the Dataflow DSL.

Synchronous tick semantics: at each tick the ready set (every connected
in-port holds a token) is computed, then fired in lexicographic nodeId order;
each firing consumes one token per in-port and emits one token per out-port.
Tokens produced at tick t become consumable at t+1. Delay channels have the
same latency but may carry an initial token present at tick 0, which is what
lets a cycle bootstrap; every cycle must contain at least one delay channel.
Source processors (no connected in-port) fire exactly once.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .canon import canon_bytes, canon_compact, loads_strict
from .errors import MalformedDocument, ProcessorError, UndelayedCycle, ValidationFailed
from .dsl import DslDefinition, validate_model
from .model import WorkspaceDoc
from .values import Uri, normalize_value, to_tagged, values_equal

TRACE_EXT = ".hgtrace.json"

DEFAULT_TIMEOUT_MS = 5000


# --- value digests -----------------------------------------------------------

def digest64(value: Any) -> str:
    """64-bit hash of the canonical value serialization, as 16 hex chars."""
    blob = canon_compact(to_tagged(value)).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


# --- graph -------------------------------------------------------------------

@dataclass(frozen=True)
class BuiltinBinding:
    op_name: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExternalBinding:
    command: tuple
    timeout_ms: int = DEFAULT_TIMEOUT_MS


@dataclass(frozen=True)
class Processor:
    node_id: str
    binding: Any  # BuiltinBinding | ExternalBinding
    in_ports: tuple  # connected in-ports, sorted
    out_ports: tuple  # declared out-ports, sorted


@dataclass(frozen=True)
class Channel:
    link_id: str
    from_node_id: str
    from_port: str
    to_node_id: str
    to_port: str
    is_delay: bool = False
    initial_token: Any = None


@dataclass(frozen=True)
class DataflowGraph:
    processors: dict
    channels: dict
    source_workspace_uri: str = ""

    def in_channels(self, node_id: str) -> dict:
        """port -> channel feeding it (fan-in is rejected at build)."""
        return {
            ch.to_port: ch
            for ch in self.channels.values()
            if ch.to_node_id == node_id
        }

    def out_channels(self, node_id: str, port: str) -> list:
        return sorted(
            (ch for ch in self.channels.values() if ch.from_node_id == node_id and ch.from_port == port),
            key=lambda ch: ch.link_id,
        )


# --- builtin op registry -------------------------------------------------------

def _require_number(node_id: str, port: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, float):
        raise ProcessorError(node_id, f"port {port!r} needs a number, got {type(value).__name__}")
    return value


def _truthy(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return value != 0.0
    if isinstance(value, str):
        return value != ""
    return bool(value)


def _fire_constant(node_id, inputs, params):
    if "value" not in params:
        raise ProcessorError(node_id, "constant needs a value")
    return {"out": params["value"]}


def _fire_passthrough(node_id, inputs, params):
    return {"out": inputs["in"]}


def _binary(fn):
    def fire(node_id, inputs, params):
        a = _require_number(node_id, "in1", _operand(node_id, "in1", inputs, params))
        b = _require_number(node_id, "in2", _operand(node_id, "in2", inputs, params))
        return {"out": fn(a, b)}

    return fire


def _operand(node_id, port, inputs, params):
    if port in inputs:
        return inputs[port]
    if port in params:
        return params[port]
    raise ProcessorError(node_id, f"no token or param for port {port!r}")


_COMPARE_OPS = {
    "eq": lambda a, b: values_equal(a, b),
    "ne": lambda a, b: not values_equal(a, b),
    "lt": lambda a, b: a < b,
    "le": lambda a, b: a <= b,
    "gt": lambda a, b: a > b,
    "ge": lambda a, b: a >= b,
}


def _fire_compare(node_id, inputs, params):
    op = params.get("op", "eq")
    if op not in _COMPARE_OPS:
        raise ProcessorError(node_id, f"unknown compare op {op!r}")
    a = _operand(node_id, "in1", inputs, params)
    b = _operand(node_id, "in2", inputs, params)
    if op not in ("eq", "ne"):
        same_numbers = isinstance(a, float) and isinstance(b, float) and not isinstance(a, bool) and not isinstance(b, bool)
        same_text = isinstance(a, str) and isinstance(b, str)
        if not (same_numbers or same_text):
            raise ProcessorError(node_id, f"compare {op!r} needs two numbers or two strings")
    return {"out": bool(_COMPARE_OPS[op](a, b))}


def _fire_merge(node_id, inputs, params):
    return {"out": [inputs[p] for p in sorted(inputs)]}


def _fire_gate(node_id, inputs, params):
    ctl = _operand(node_id, "ctl", inputs, params)
    if _truthy(ctl):
        return {"out": inputs["in"]}
    return {}


def _fire_log(node_id, inputs, params):
    return {"out": inputs["in"]}


# op -> (allowed in-ports, out-ports, fire, param-fillable ports)
BUILTIN_OPS = {
    "constant": ((), ("out",), _fire_constant, ()),
    "passthrough": (("in",), ("out",), _fire_passthrough, ()),
    "add": (("in1", "in2"), ("out",), _binary(lambda a, b: a + b), ("in1", "in2")),
    "multiply": (("in1", "in2"), ("out",), _binary(lambda a, b: a * b), ("in1", "in2")),
    "compare": (("in1", "in2"), ("out",), _fire_compare, ("in1", "in2")),
    "merge": (("in1", "in2"), ("out",), _fire_merge, ()),
    "gate": (("in", "ctl"), ("out",), _fire_gate, ("ctl",)),
    "log": (("in",), ("out",), _fire_log, ()),
}


# --- trace ----------------------------------------------------------------------

@dataclass(frozen=True)
class TraceEvent:
    tick: int
    node_id: str
    consumed: dict  # port -> value digest
    consumed_via: dict  # port -> channel (link) id that delivered the token
    produced: dict  # port -> value digest


@dataclass(frozen=True)
class ExecutionTrace:
    run_id: str
    events: tuple
    terminal: Any  # "completed" | "tickLimit" | ("error", nodeId, message)


def trace_to_plain(trace: ExecutionTrace) -> dict:
    if isinstance(trace.terminal, tuple):
        terminal: Any = {"error": {"nodeId": trace.terminal[1], "message": trace.terminal[2]}}
    else:
        terminal = trace.terminal
    return {
        "runId": trace.run_id,
        "events": [
            {
                "tick": e.tick,
                "nodeId": e.node_id,
                "consumed": dict(sorted(e.consumed.items())),
                "consumedVia": dict(sorted(e.consumed_via.items())),
                "produced": dict(sorted(e.produced.items())),
            }
            for e in trace.events
        ],
        "terminal": terminal,
    }


def serialize_trace(trace: ExecutionTrace) -> bytes:
    return canon_bytes(trace_to_plain(trace))


def trace_from_plain(obj: Any) -> ExecutionTrace:
    terminal = obj["terminal"]
    if isinstance(terminal, dict):
        terminal = ("error", terminal["error"]["nodeId"], terminal["error"]["message"])
    return ExecutionTrace(
        run_id=obj["runId"],
        events=tuple(
            TraceEvent(
                tick=e["tick"],
                node_id=e["nodeId"],
                consumed=e["consumed"],
                consumed_via=e["consumedVia"],
                produced=e["produced"],
            )
            for e in obj["events"]
        ),
        terminal=terminal,
    )


def deserialize_trace(data: bytes | str) -> ExecutionTrace:
    return trace_from_plain(loads_strict(data))


# --- building ---------------------------------------------------------------------

def build_dataflow(ws: WorkspaceDoc, dsl: DslDefinition) -> DataflowGraph:
    """Project a validated workspace into an executable graph."""
    probe = replace(ws, dsl_refs=(dsl.uri,))
    violations = validate_model(probe, {dsl.uri: dsl})
    if violations:
        raise ValidationFailed(violations)

    channels: dict[str, Channel] = {}
    for lid in sorted(ws.links):
        link = ws.links[lid]
        is_delay = link.type_key == "delay"
        channels[lid] = Channel(
            link_id=lid,
            from_node_id=link.from_node_id,
            from_port=link.from_port or "out",
            to_node_id=link.to_node_id,
            to_port=link.to_port or "in",
            is_delay=is_delay,
            initial_token=link.attributes.get("initialToken"),
        )

    # one channel per in-port
    seen_inputs: dict[tuple, str] = {}
    for lid in sorted(channels):
        ch = channels[lid]
        key = (ch.to_node_id, ch.to_port)
        if key in seen_inputs:
            raise ProcessorError(
                ch.to_node_id,
                f"port {ch.to_port!r} is fed by both {seen_inputs[key]!r} and {lid!r}",
            )
        seen_inputs[key] = lid

    processors: dict[str, Processor] = {}
    for nid in sorted(ws.nodes):
        node = ws.nodes[nid]
        attrs = node.attributes
        op = attrs.get("op")
        command = attrs.get("command")
        connected_in = tuple(sorted(ch.to_port for ch in channels.values() if ch.to_node_id == nid))
        connected_out = tuple(sorted({ch.from_port for ch in channels.values() if ch.from_node_id == nid}))
        if op:
            if op not in BUILTIN_OPS:
                raise ProcessorError(nid, f"unknown builtin op {op!r}")
            allowed_in, out_ports, _, fillable = BUILTIN_OPS[op]
            params = attrs.get("params", {})
            for port in connected_in:
                if port not in allowed_in:
                    raise ProcessorError(nid, f"op {op!r} has no in-port {port!r}")
            for port in connected_out:
                if port not in out_ports:
                    raise ProcessorError(nid, f"op {op!r} has no out-port {port!r}")
            if op == "merge":
                if not connected_in:
                    raise ProcessorError(nid, "merge needs at least one connected in-port")
            else:
                for port in allowed_in:
                    if port not in connected_in and not (port in fillable and port in params):
                        raise ProcessorError(
                            nid, f"op {op!r}: in-port {port!r} is neither connected nor supplied by params"
                        )
            binding: Any = BuiltinBinding(op_name=op, params=params)
        elif command:
            if not isinstance(command, list) or not all(isinstance(c, str) for c in command) or not command:
                raise ProcessorError(nid, "command must be a non-empty list of strings")
            timeout = attrs.get("timeoutMs", float(DEFAULT_TIMEOUT_MS))
            if not isinstance(timeout, float) or timeout <= 0:
                raise ProcessorError(nid, "timeoutMs must be a positive number")
            declared_in = tuple(sorted(str(p) for p in attrs.get("inPorts", ["in"])))
            declared_out = tuple(sorted(str(p) for p in attrs.get("outPorts", ["out"])))
            for port in connected_in:
                if port not in declared_in:
                    raise ProcessorError(nid, f"undeclared in-port {port!r}")
            for port in connected_out:
                if port not in declared_out:
                    raise ProcessorError(nid, f"undeclared out-port {port!r}")
            binding = ExternalBinding(command=tuple(command), timeout_ms=int(timeout))
            out_ports = declared_out
        else:
            raise ProcessorError(nid, "processor needs an op or a command")
        processors[nid] = Processor(
            node_id=nid,
            binding=binding,
            in_ports=connected_in,
            out_ports=tuple(out_ports),
        )

    _reject_undelayed_cycles(processors, channels)
    return DataflowGraph(processors=processors, channels=channels, source_workspace_uri=ws.uri)


def _reject_undelayed_cycles(processors: dict, channels: dict) -> None:
    """Every cycle must contain a delay channel, i.e. the non-delay subgraph
    is acyclic. Reports the first offending strongly connected component."""
    edges: dict[str, list[str]] = {nid: [] for nid in processors}
    for ch in channels.values():
        if not ch.is_delay:
            edges[ch.from_node_id].append(ch.to_node_id)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set = set()
    stack: list[str] = []
    counter = [0]
    sccs: list[list[str]] = []

    def strongconnect(root: str) -> None:
        work = [(root, iter(edges[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            nid, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = low[succ] = counter[0]
                    counter[0] += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(edges[succ])))
                    advanced = True
                    break
                if succ in on_stack:
                    low[nid] = min(low[nid], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[nid])
            if low[nid] == index[nid]:
                scc = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    scc.append(member)
                    if member == nid:
                        break
                sccs.append(scc)

    for nid in sorted(processors):
        if nid not in index:
            strongconnect(nid)

    self_loops = {ch.from_node_id for ch in channels.values() if not ch.is_delay and ch.from_node_id == ch.to_node_id}
    bad = [sorted(s) for s in sccs if len(s) > 1 or (s[0] in self_loops)]
    if bad:
        raise UndelayedCycle(min(bad))


# --- running -----------------------------------------------------------------------

@dataclass(frozen=True)
class RunState:
    queues: dict  # link_id -> list of token values (head is next to consume)
    fired_sources: frozenset
    tick: int
    events: tuple
    outputs: dict  # node_id -> list of emitted values
    run_inputs: dict
    error: Optional[tuple] = None  # ("error", nodeId, message)


def init_run(g: DataflowGraph, inputs: Optional[dict] = None) -> RunState:
    inputs = {k: normalize_value(v) for k, v in (inputs or {}).items()}
    for nid in inputs:
        proc = g.processors.get(nid)
        if proc is None:
            raise MalformedDocument(f"inputs name unknown processor {nid!r}")
        if not isinstance(proc.binding, BuiltinBinding) or proc.binding.op_name != "constant":
            raise MalformedDocument(f"inputs may only target constant processors, not {nid!r}")
    queues = {
        lid: ([ch.initial_token] if (ch.is_delay and ch.initial_token is not None) else [])
        for lid, ch in g.channels.items()
    }
    return RunState(
        queues=queues,
        fired_sources=frozenset(),
        tick=0,
        events=(),
        outputs={nid: [] for nid in g.processors},
        run_inputs=inputs,
    )


def _ready_ids(g: DataflowGraph, state: RunState) -> list[str]:
    ready = []
    for nid in sorted(g.processors):
        in_chs = g.in_channels(nid)
        if not in_chs:
            if nid not in state.fired_sources:
                ready.append(nid)
        elif all(state.queues[ch.link_id] for ch in in_chs.values()):
            ready.append(nid)
    return ready


def _apply_binding(proc: Processor, inputs: dict, run_inputs: dict) -> dict:
    if isinstance(proc.binding, BuiltinBinding):
        _, _, fire, _ = BUILTIN_OPS[proc.binding.op_name]
        params = dict(proc.binding.params)
        if proc.binding.op_name == "constant" and proc.node_id in run_inputs:
            params["value"] = run_inputs[proc.node_id]
        outs = fire(proc.node_id, inputs, params)
        return {port: normalize_value(v) for port, v in outs.items()}
    return _run_external(proc, inputs)


def _run_external(proc: Processor, inputs: dict) -> dict:
    request = json.dumps({"inputs": {p: _plain_value(v) for p, v in inputs.items()}}) + "\n"
    try:
        result = subprocess.run(
            list(proc.binding.command),
            input=request.encode("utf-8"),
            capture_output=True,
            timeout=proc.binding.timeout_ms / 1000.0,
        )
    except subprocess.TimeoutExpired:
        raise ProcessorError(proc.node_id, f"external command timed out after {proc.binding.timeout_ms} ms")
    except OSError as exc:
        raise ProcessorError(proc.node_id, f"external command failed to start: {exc}")
    if result.returncode != 0:
        raise ProcessorError(proc.node_id, f"external command exited {result.returncode}")
    line = result.stdout.decode("utf-8", errors="replace").splitlines()
    if not line:
        raise ProcessorError(proc.node_id, "external command produced no response line")
    try:
        response = json.loads(line[0])
    except ValueError as exc:
        raise ProcessorError(proc.node_id, f"bad response JSON: {exc}")
    outs = response.get("outputs")
    if not isinstance(outs, dict):
        raise ProcessorError(proc.node_id, 'response must be {"outputs": {...}}')
    cleaned = {}
    for port, value in outs.items():
        if port not in proc.out_ports:
            raise ProcessorError(proc.node_id, f"response names undeclared out-port {port!r}")
        try:
            cleaned[port] = normalize_value(value)
        except MalformedDocument as exc:
            raise ProcessorError(proc.node_id, f"bad output value on {port!r}: {exc.message}")
    return cleaned


def _plain_value(value: Any) -> Any:
    """Model value -> plain JSON for the external wire (uri becomes a string)."""
    if isinstance(value, Uri):
        return str(value)
    if isinstance(value, list):
        return [_plain_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain_value(v) for k, v in value.items()}
    return value


def step(g: DataflowGraph, state: RunState) -> tuple[RunState, tuple]:
    """Advance exactly one tick; quiescent or errored states are fixed points."""
    if state.error is not None:
        return state, ()
    ready = _ready_ids(g, state)
    if not ready:
        return state, ()

    queues = {lid: list(q) for lid, q in state.queues.items()}
    pending: dict[str, list] = {lid: [] for lid in g.channels}
    outputs = {nid: list(v) for nid, v in state.outputs.items()}
    fired_sources = set(state.fired_sources)
    events: list[TraceEvent] = []
    error: Optional[tuple] = None

    for nid in ready:
        proc = g.processors[nid]
        in_chs = g.in_channels(nid)
        consumed_values = {}
        consumed = {}
        consumed_via = {}
        for port in sorted(in_chs):
            ch = in_chs[port]
            token = queues[ch.link_id].pop(0)
            consumed_values[port] = token
            consumed[port] = digest64(token)
            consumed_via[port] = ch.link_id
        if not in_chs:
            fired_sources.add(nid)
        try:
            produced_values = _apply_binding(proc, consumed_values, state.run_inputs)
        except ProcessorError as exc:
            error = ("error", exc.node_id, exc.message)
            break
        produced = {}
        for port in sorted(produced_values):
            value = produced_values[port]
            outputs[nid].append(value)
            produced[port] = digest64(value)
            for ch in g.out_channels(nid, port):
                pending[ch.link_id].append(value)
        events.append(
            TraceEvent(tick=state.tick, node_id=nid, consumed=consumed, consumed_via=consumed_via, produced=produced)
        )

    for lid, tokens in pending.items():
        queues[lid].extend(tokens)

    new_state = RunState(
        queues=queues,
        fired_sources=frozenset(fired_sources),
        tick=state.tick + 1,
        events=state.events + tuple(events),
        outputs=outputs,
        run_inputs=state.run_inputs,
        error=error,
    )
    return new_state, tuple(events)


def run(
    g: DataflowGraph,
    inputs: Optional[dict] = None,
    limits: Optional[dict] = None,
    run_id: str = "run",
) -> tuple[dict, ExecutionTrace]:
    """Run to quiescence or the tick limit; the trace records every firing."""
    limits = limits or {}
    max_ticks = limits.get("maxTicks", 1000)
    if not isinstance(max_ticks, int) or max_ticks < 1:
        raise MalformedDocument("maxTicks must be an integer >= 1")
    state = init_run(g, inputs)
    for _ in range(max_ticks):
        state, fired = step(g, state)
        if state.error is not None or not fired:
            break
    if state.error is not None:
        terminal: Any = state.error
    elif _ready_ids(g, state):
        terminal = "tickLimit"
    else:
        terminal = "completed"
    trace = ExecutionTrace(run_id=run_id, events=state.events, terminal=terminal)
    return state.outputs, trace
