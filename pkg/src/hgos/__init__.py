"""Graph workspace kernel.

Workspaces are typed node/link graphs governed by user-definable DSLs, stored
as canonical JSON files and served over a small HTTP API. The kernel bundles
a Meta-DSL compiler, a deterministic dataflow engine with trace capture,
template code generation, an expression search, and a replay animator.
"""

from .animator import (
    AnimationScript,
    Step,
    Timeline,
    compile_timeline,
    trace_to_script,
)
from .codegen import (
    GeneratedArtifact,
    Selector,
    Template,
    TemplateSet,
    generate,
    render_template,
)
from .dataflow import (
    DataflowGraph,
    ExecutionTrace,
    build_dataflow,
    init_run,
    run,
    step,
)
from .dsl import (
    DslDefinition,
    DslRegistry,
    LinkTypeDef,
    NodeTypeDef,
    Violation,
    builtin_codegen,
    builtin_dataflow,
    builtin_meta,
    builtin_workspace_nav,
    compile_meta_model,
    meta_workspace_from_dsl,
    validate_model,
)
from .model import (
    LinkRecord,
    NodeRecord,
    WorkspaceDoc,
    create_link,
    create_node,
    delete_link,
    delete_node,
    deserialize_workspace,
    new_workspace,
    resolve_alias,
    serialize_workspace,
    structurally_equal,
)
from .search import Query, evaluate, parse_query
from .server import ServerThread, make_server
from .store import WorkspaceStore
from .values import Uri

__version__ = "0.1.0"
