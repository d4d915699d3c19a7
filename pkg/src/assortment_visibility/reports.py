"""Instance I/O and the JSON result documents shared by the CLI and the MCP server."""

import csv
import io
import logging
import os
from pathlib import Path
from typing import Any, Literal

from .apv_exact import brute_force_apv, solve_apv_with_stats
from .apv_lp import build_apv_lp, extract_plan
from .apvc import (
    PtasRunner,
    brute_force_apvc,
    check_feasibility,
    objective,
    sandwich_check,
)
from .config import Config
from .errors import InfeasibleInstanceError, InstanceTooLargeError
from .instgen import gen_3partition, gen_random
from .lp_engine import solve_lp
from .mnl_core import Instance, Plan, plan_is_feasible, revenue, revenues_equal
from .pricing import fee_increment, fee_report

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "ASSORT_SEED"
LP_TOLERANCE = 1e-6

Method = Literal["nested", "lp"]


def read_instance(path: Path) -> Instance:
    """Load an instance from its JSON file.

    Raises:
        OSError: If the file cannot be read
        pydantic.ValidationError: If the content is not a valid instance
    """
    return Instance.model_validate_json(path.read_text())


def instance_to_json(instance: Instance) -> str:
    return instance.model_dump_json(by_alias=True)


def resolve_seed(explicit: int | None, config: Config) -> int:
    """Seed from the command line, else ``ASSORT_SEED``, else the config."""
    if explicit is not None:
        return explicit
    env = os.environ.get(SEED_ENV_VAR)
    if env:
        return int(env)
    return config.ptas.seed


def plan_document(instance: Instance, plan: Plan) -> dict[str, Any]:
    """Objective, per-customer assortments and feasibility of a plan."""
    return {
        "objective": plan.objective,
        "assortments": plan.members(),
        "customer_revenues": [revenue(instance, s) for s in plan.assortments],
        "feasible": plan_is_feasible(instance, plan),
    }


def plan_csv(instance: Instance, plan: Plan) -> str:
    """One row per customer: position, offered products, expected revenue."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["customer", "products", "revenue"])
    for t, s in enumerate(plan.assortments):
        writer.writerow([t, ";".join(str(i) for i in s.ordered), repr(revenue(instance, s))])
    return buffer.getvalue()


def solve_apv_document(
    instance: Instance, method: Method = "nested"
) -> tuple[dict[str, Any], Plan]:
    """Solve the visibility-constrained problem with the nested sets or the LP."""
    if method == "lp":
        solution = solve_lp(build_apv_lp(instance))
        plan = extract_plan(instance, solution)
        document = plan_document(instance, plan)
        document.update(
            method="lp",
            lp_value=solution.value,
            dual_bound=solution.dual_bound,
            iterations=solution.iterations,
        )
        return document, plan
    plan, inspections = solve_apv_with_stats(instance)
    document = plan_document(instance, plan)
    document.update(method="nested", inspections=inspections)
    return document, plan


def solve_apvc_document(
    instance: Instance,
    config: Config,
    seed: int,
    oracle: bool = False,
) -> tuple[dict[str, Any], Plan]:
    """Run the approximation scheme, or the exhaustive oracle when ``oracle`` is set."""
    if oracle:
        plan = brute_force_apvc(instance, config.oracle.max_cells)
        document = plan_document(instance, plan)
        document.update(method="oracle", sales=objective(instance, plan))
        return document, plan

    settings = config.ptas
    runner = PtasRunner(
        instance,
        settings.epsilon,
        reps=settings.reps,
        guess_budget=settings.guess_budget,
        workers=settings.workers,
    )
    feasible_guesses = runner.prepare()
    plan = runner.run(seed)
    rounded, sales = sandwich_check(plan, instance, runner.disc)
    document = plan_document(instance, plan)
    document.update(
        method="ptas",
        epsilon=settings.epsilon,
        seed=seed,
        reps=settings.reps,
        feasible_guesses=feasible_guesses,
        sales=sales,
        rounded_sales=rounded,
    )
    return document, plan


def fees_document(instance: Instance, what_if: int | None = None) -> dict[str, Any]:
    """Fee report, plus the fee after one more exposure of ``what_if``."""
    if what_if is not None:
        instance.require_product(what_if)
    document = fee_report(instance).model_dump(mode="json")
    if what_if is not None:
        document["what_if"] = {
            "product": what_if,
            "current_fee": document["fees"][what_if],
            "raised_fee": fee_increment(instance, what_if),
        }
    return document


def generate_instance(
    kind: Literal["random", "gadget"],
    n: int = 4,
    horizon: int = 2,
    seed: int = 0,
    price_mode: Literal["general", "equal"] = "general",
    k: int | None = None,
    integers: list[int] | None = None,
) -> Instance:
    """Generate a random instance or a 3-PARTITION gadget."""
    if kind == "gadget":
        return gen_3partition(integers or [])
    return gen_random(n, horizon, seed, price_mode=price_mode, k=k)


def _check(name: str, passed: bool, detail: str) -> dict[str, Any]:
    if not passed:
        logger.warning(f"Check {name} failed: {detail}")
    return {"name": name, "passed": passed, "detail": detail}


def verify_document(instance: Instance, max_cells: int) -> dict[str, Any]:
    """Cross-check the solvers against each other and the exhaustive oracles.

    Checks needing an oracle are skipped when n*T exceeds ``max_cells``.
    """
    checks = []
    nested, _ = solve_apv_with_stats(instance)
    checks.append(
        _check(
            "nested_feasible",
            plan_is_feasible(instance, nested, enforce_cap=False),
            "nested plan meets every visibility requirement",
        )
    )

    solution = solve_lp(build_apv_lp(instance))
    lp_plan = extract_plan(instance, solution)
    checks.append(
        _check(
            "lp_matches_nested",
            abs(solution.value - nested.objective) <= LP_TOLERANCE
            and abs(lp_plan.objective - nested.objective) <= LP_TOLERANCE,
            f"lp={solution.value:.9g} extracted={lp_plan.objective:.9g} "
            f"nested={nested.objective:.9g}",
        )
    )
    if solution.dual_bound is not None:
        checks.append(
            _check(
                "lp_dual_bound",
                abs(solution.dual_bound - solution.value) <= LP_TOLERANCE,
                f"dual={solution.dual_bound:.9g} primal={solution.value:.9g}",
            )
        )

    report = fee_report(instance)
    checks.append(
        _check(
            "fees_sum_to_loss",
            abs(sum(report.fees) - report.delta) <= 1e-9 or report.delta == 0.0,
            f"sum={sum(report.fees):.9g} delta={report.delta:.9g}",
        )
    )

    try:
        oracle = brute_force_apv(instance, max_cells)
        checks.append(
            _check(
                "nested_matches_oracle",
                revenues_equal(oracle.objective, nested.objective),
                f"oracle={oracle.objective:.9g} nested={nested.objective:.9g}",
            )
        )
    except InstanceTooLargeError as e:
        logger.info(f"Skipping oracle comparison: {e}")

    if instance.cardinality_cap is not None:
        checks.extend(_capped_checks(instance, max_cells))

    passed = all(c["passed"] for c in checks)
    return {"checks": checks, "passed": passed}


def _capped_checks(instance: Instance, max_cells: int) -> list[dict[str, Any]]:
    """Max-flow feasibility against the capped oracle."""
    flow_feasible = check_feasibility(instance)
    try:
        brute_force_apvc(instance, max_cells)
        oracle_feasible = True
    except InfeasibleInstanceError:
        oracle_feasible = False
    except InstanceTooLargeError as e:
        logger.info(f"Skipping capped oracle comparison: {e}")
        return []
    return [
        _check(
            "flow_matches_oracle",
            flow_feasible == oracle_feasible,
            f"flow={flow_feasible} oracle={oracle_feasible}",
        )
    ]
