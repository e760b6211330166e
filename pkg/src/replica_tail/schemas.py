"""JSON Schemas (draft 2020-12) for everything the command line emits.

``replica-tail schema NAME`` prints one of these.
"""

from __future__ import annotations

_num = {"type": "number"}
_num_or_null = {"type": ["number", "null"]}
_prob = {"type": "number", "minimum": 0, "maximum": 1}

SOLUTION = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "VariationalSolution",
    "type": "object",
    "required": ["assignment", "objective", "constraint_value", "multiplier", "kkt_residual", "status", "starts_used"],
    "properties": {
        "assignment": {"type": "array", "items": _prob},
        "objective": {"type": "number", "minimum": 0},
        "constraint_value": _num,
        "threshold": _num,
        "multiplier": {"type": "number", "minimum": 0},
        "kkt_residual": _num,
        "status": {"enum": ["converged", "max-iterations", "infeasible"]},
        "starts_used": {"type": "integer", "minimum": 1},
        "method": {"type": "string"},
        "boundary": {"type": "array", "items": {"type": "integer"}},
        "notes": {"type": "object"},
        "replica_value": _num_or_null,
        "oracle": {
            "type": "object",
            "required": ["grid_objective", "difference", "agree"],
            "properties": {"grid_objective": _num, "difference": _num, "agree": {"type": "boolean"}},
        },
    },
}

CERTIFICATE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "BreakingCertificate",
    "type": "object",
    "required": ["kind", "s", "p", "r", "r1", "r2", "lambda0", "M", "certified_objective",
                 "symmetric_objective", "gap", "constraint_slack", "objective_slack", "witness_hypergraph_spec"],
    "properties": {
        "kind": {"enum": ["chord", "concave-pair"]},
        "s": {"type": "integer", "minimum": 2},
        "p": _prob, "r": _prob, "r1": _prob, "r2": _prob,
        "lambda": _num, "lambda0": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "delta": _num,
        "M": {"type": "integer", "minimum": 1},
        "K": {"type": "integer", "minimum": 0},
        "block_size": {"type": "integer", "minimum": 2},
        "certified_objective": _num,
        "symmetric_objective": _num,
        "gap": {"type": "number", "exclusiveMinimum": 0},
        "constraint_slack": _num,
        "objective_slack": _num,
        "C_p": _num,
        "witness_hypergraph_spec": {"type": "object"},
    },
}

SYMMETRIC_MESSAGE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "NoBreaking",
    "type": "object",
    "required": ["symmetric", "message"],
    "properties": {"symmetric": {"const": True}, "message": {"type": "string"}, "gap": _num},
}

GRAPHON_RESULT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "GraphonResult",
    "type": "object",
    "required": ["mode", "value"],
    "properties": {
        "mode": {"enum": ["slope", "two-sided"]},
        "value": _num,
        "assignment": {"type": "array", "items": _prob},
        "replica_value": _num,
        "homomorphism_density": _num,
        "epsilon": _num,
        "status": {"type": "string"},
    },
}

TAIL = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "TailEstimate",
    "type": "object",
    "required": ["probability", "log_rate", "method", "num_vertices"],
    "properties": {
        "probability": {"type": "number", "minimum": 0},
        "log_rate": _num_or_null,
        "method": {"enum": ["exact", "plain-mc", "tilted-mc"]},
        "num_vertices": {"type": "integer"},
        "std_error": _num,
        "samples": {"type": "integer"},
        "seed": {"type": "integer"},
        "effective_sample_size": _num,
        "hits": {"type": "integer"},
    },
}

MEANFIELD = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "MeanFieldReport",
    "type": "object",
    "required": ["num_vertices", "num_edges", "uniformity", "max_degree", "max_codegree", "codegree_ratio",
                 "degree_ratio", "edge_ratio", "graph_edge_ratio", "lipschitz_bound", "gradient_complexity_bound"],
    "properties": {
        "num_vertices": {"type": "integer"},
        "num_edges": {"type": "integer"},
        "uniformity": {"type": "integer"},
        "max_degree": {"type": "integer"},
        "max_codegree": {"type": "integer"},
        "codegree_ratio": {"type": "number", "minimum": 0},
        "degree_ratio": {"type": "number", "minimum": 0},
        "edge_ratio": {"type": "number", "minimum": 0},
        "graph_edge_ratio": {"type": ["number", "null"], "minimum": 0},
        "lipschitz_bound": {"type": "number", "minimum": 0},
        "gradient_complexity_bound": {"type": "number", "minimum": 0},
        "gradient_complexity_ratio": {"type": "number", "minimum": 0},
        "size": {"type": "integer"},
    },
}

SCHEMAS = {
    "solution": SOLUTION,
    "certificate": CERTIFICATE,
    "no-breaking": SYMMETRIC_MESSAGE,
    "graphon": GRAPHON_RESULT,
    "tail": TAIL,
    "meanfield": MEANFIELD,
}
