"""Reference solver backend for the subprocess JSON protocol.

Run as ``python -m qzone.backend``: reads one request document from stdin,
solves it by exact enumeration, and writes one response document to stdout.
Useful for integration tests and as a template for real external solvers.
"""

from __future__ import annotations

import json
import sys

from .errors import ValidationError
from .subsolvers import PROTOCOL_VERSION, model_from_request, solve_exact


def main() -> int:
    try:
        payload = json.load(sys.stdin)
    except json.JSONDecodeError as exc:
        print(f"error: request is not valid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        model = model_from_request(payload)
        result = solve_exact(model)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    response = {
        "format_version": PROTOCOL_VERSION,
        "assignment": result.assignment.to_list(),
        "energy": result.energy,
    }
    json.dump(response, sys.stdout)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
