"""MCP server exposing the solvers as tools."""

import json
import logging
from typing import Any, Literal

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool
from pydantic import BaseModel, Field, ValidationError

from .config import Config
from .errors import AssortmentError
from .mnl_core import Instance
from .reports import (
    fees_document,
    generate_instance,
    instance_to_json,
    resolve_seed,
    solve_apv_document,
    solve_apvc_document,
    verify_document,
)

logger = logging.getLogger(__name__)


# Pydantic models for tool inputs
class SolveApvInput(BaseModel):
    """Input for the solve_apv tool."""

    instance: Instance = Field(..., description="Instance with prices, weights, visibility, T, k")
    method: Literal["nested", "lp"] = Field("nested", description="Exact solver to use")


class SolveApvcInput(BaseModel):
    """Input for the solve_apvc tool."""

    instance: Instance = Field(..., description="Equal-price instance with a cardinality cap k")
    epsilon: float | None = Field(None, gt=0.0, lt=1.0, description="Accuracy parameter")
    seed: int | None = Field(None, ge=0, description="Rounding seed")
    reps: int | None = Field(None, ge=1, description="Roundings per feasible guess")
    oracle: bool = Field(False, description="Solve exactly by enumeration instead")


class FeeReportInput(BaseModel):
    """Input for the fee_report tool."""

    instance: Instance = Field(..., description="Instance to price")
    what_if: int | None = Field(None, ge=0, description="Product whose requirement is raised")


class GenerateInstanceInput(BaseModel):
    """Input for the generate_instance tool."""

    kind: Literal["random", "gadget"] = Field("random", description="Generator to use")
    n: int = Field(4, ge=1, description="Number of products (random)")
    T: int = Field(2, ge=1, description="Number of customers (random)")
    seed: int | None = Field(None, ge=0, description="Generator seed (random)")
    price_mode: Literal["general", "equal"] = Field("general", description="Price distribution")
    k: int | None = Field(None, ge=1, description="Cardinality cap (random)")
    integers: list[int] | None = Field(None, description="3-PARTITION integers (gadget)")


class VerifyInstanceInput(BaseModel):
    """Input for the verify_instance tool."""

    instance: Instance = Field(..., description="Instance to cross-check")


TOOLS: dict[str, tuple[type[BaseModel], str]] = {
    "solve_apv": (
        SolveApvInput,
        "Optimal visibility-constrained assortment plan (nested expanded sets or LP).",
    ),
    "solve_apvc": (
        SolveApvcInput,
        "Near-optimal plan under a per-customer cardinality cap for equal-price instances.",
    ),
    "fee_report": (
        FeeReportInput,
        "Revenue lost to visibility requirements and the fee each product's vendor pays.",
    ),
    "generate_instance": (
        GenerateInstanceInput,
        "Generate a seeded random instance or a 3-PARTITION hardness gadget.",
    ),
    "verify_instance": (
        VerifyInstanceInput,
        "Cross-check the exact solvers, the LP and the oracles on an instance.",
    ),
}


def _text(document: Any) -> list[TextContent]:
    return [TextContent(type="text", text=json.dumps(document, sort_keys=True, indent=2))]


async def dispatch(name: str, arguments: dict[str, Any], config: Config) -> list[TextContent]:
    """Run one tool call and render its result or error as text content."""
    if name not in TOOLS:
        return [TextContent(type="text", text=f"Unknown tool: {name}")]
    model, _ = TOOLS[name]
    try:
        request = model(**arguments)
        if isinstance(request, SolveApvInput):
            document, _ = solve_apv_document(request.instance, request.method)
        elif isinstance(request, SolveApvcInput):
            ptas = config.ptas.model_copy(
                update={
                    key: value
                    for key, value in (("epsilon", request.epsilon), ("reps", request.reps))
                    if value is not None
                }
            )
            run_config = config.model_copy(update={"ptas": ptas})
            seed = resolve_seed(request.seed, config)
            document, _ = solve_apvc_document(request.instance, run_config, seed, request.oracle)
        elif isinstance(request, FeeReportInput):
            document = fees_document(request.instance, request.what_if)
        elif isinstance(request, GenerateInstanceInput):
            instance = generate_instance(
                request.kind,
                n=request.n,
                horizon=request.T,
                seed=resolve_seed(request.seed, config),
                price_mode=request.price_mode,
                k=request.k,
                integers=request.integers,
            )
            document = json.loads(instance_to_json(instance))
        else:
            assert isinstance(request, VerifyInstanceInput)
            document = verify_document(request.instance, config.oracle.max_cells)
    except (AssortmentError, ValidationError) as e:
        logger.error(f"Tool {name} failed: {e}")
        return [TextContent(type="text", text=f"Error: {e}")]
    return _text(document)


def create_server(config: Config) -> Server:
    """Create and configure the MCP server.

    Args:
        config: Solver settings used for every tool call

    Returns:
        Configured Server instance
    """
    server = Server("assortment-visibility")

    @server.list_tools()
    async def list_tools() -> list[Tool]:
        """List available MCP tools."""
        return [
            Tool(name=name, description=description, inputSchema=model.model_json_schema())
            for name, (model, description) in TOOLS.items()
        ]

    @server.call_tool()
    async def call_tool(name: str, arguments: dict[str, Any]) -> list[TextContent]:
        """Handle tool calls by routing to the solvers."""
        return await dispatch(name, arguments, config)

    return server


async def run_server(config: Config) -> None:
    """Run the MCP server with stdio transport.

    Args:
        config: Configuration for the server
    """
    server = create_server(config)
    logger.info(f"Serving {len(TOOLS)} tools over stdio")
    async with stdio_server() as (read_stream, write_stream):
        await server.run(read_stream, write_stream, server.create_initialization_options())
