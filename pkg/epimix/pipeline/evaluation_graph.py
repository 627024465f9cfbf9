import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, TypedDict

from langgraph.graph import END, StateGraph

from epimix.config import MethodSettings
from epimix.core import WeeklySeries
from epimix.errors import EpimixError, NonConvergence
from epimix.evaluation import (
    HORIZONS,
    ForecastingResult,
    ModelingResult,
    run_forecasting_task,
    run_modeling_task,
)
from epimix.methods import build_method, country_stream
from epimix.solvers.nnls import SOLVER_METHODS

logger = logging.getLogger(__name__)

MAX_REPAIRS = 2
ITERATION_BOOST = 10
# repairs only touch NNLS settings
REPAIRABLE_METHODS = ("gauss-dict", "sir-dict")


class EvaluationState(TypedDict):
    series: WeeklySeries
    method: str
    settings: MethodSettings
    tasks: List[str]
    horizons: List[int]
    stream: int
    modeling: Optional[ModelingResult]
    forecasting: Optional[ForecastingResult]
    error: Optional[Dict[str, Any]]
    repair_count: int
    trace: List[str]


def _error_entry(exc: BaseException, task: str) -> Dict[str, Any]:
    exit_code = exc.exit_code if isinstance(exc, EpimixError) else 3
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": exit_code, "task": task}


class EvaluationPipeline:
    """Per-(country, method) graph: route → modeling ⇄ repair → forecasting → finalize."""

    def __init__(
        self,
        settings: Optional[MethodSettings] = None,
        tasks: Sequence[str] = ("t1",),
        horizons: Sequence[int] = HORIZONS,
    ):
        self.settings = settings or MethodSettings()
        self.tasks = list(tasks)
        self.horizons = list(horizons)
        self.graph = self._build_graph()

    def _build_graph(self):
        workflow = StateGraph(EvaluationState)

        workflow.add_node("router", self._route_node)
        workflow.add_node("modeling", self._modeling_node)
        workflow.add_node("repair", self._repair_node)
        workflow.add_node("forecasting", self._forecasting_node)
        workflow.add_node("finalize", self._finalize_node)

        workflow.set_entry_point("router")
        workflow.add_conditional_edges(
            "router",
            self._first_task,
            {
                "t1": "modeling",
                "t2": "forecasting",
                "done": "finalize",
            },
        )
        workflow.add_conditional_edges(
            "modeling",
            self._should_repair,
            {
                "repair": "repair",
                "t2": "forecasting",
                "done": "finalize",
            },
        )
        workflow.add_edge("repair", "modeling")
        workflow.add_edge("forecasting", "finalize")
        workflow.add_edge("finalize", END)

        return workflow.compile()

    def _route_node(self, state: EvaluationState) -> EvaluationState:
        # unknown names fail here, before any fitting
        build_method(state["method"], state["settings"])
        state["trace"].append(f"{state['series'].country}/{state['method']}: tasks {','.join(state['tasks'])}")
        return state

    def _first_task(self, state: EvaluationState) -> str:
        if "t1" in state["tasks"]:
            return "t1"
        if "t2" in state["tasks"]:
            return "t2"
        return "done"

    def _modeling_node(self, state: EvaluationState) -> EvaluationState:
        method = build_method(state["method"], state["settings"])
        try:
            state["modeling"] = run_modeling_task(state["series"], method, stream=state["stream"])
            state["error"] = None
            state["trace"].append(f"T1 MAPE {state['modeling'].mape:.4g}")
        except (EpimixError, ValueError, ArithmeticError) as exc:
            state["modeling"] = None
            state["error"] = _error_entry(exc, "t1")
            state["trace"].append(f"T1 failed: {exc}")
        return state

    def _should_repair(self, state: EvaluationState) -> str:
        error = state["error"]
        if (error is not None and error["error"] == NonConvergence.__name__
                and state["method"] in REPAIRABLE_METHODS and state["repair_count"] < MAX_REPAIRS):
            return "repair"
        if "t2" in state["tasks"]:
            return "t2"
        return "done"

    def _repair_node(self, state: EvaluationState) -> EvaluationState:
        """Retry 1 switches the NNLS algorithm, retry 2 raises the iteration cap."""
        state["repair_count"] += 1
        settings = state["settings"]
        if state["repair_count"] == 1:
            other = [m for m in SOLVER_METHODS if m != settings.solver][0]
            settings = settings.model_copy(update={"solver": other})
            change = f"solver -> {other}"
        else:
            settings = settings.model_copy(update={"max_iter": settings.max_iter * ITERATION_BOOST})
            change = f"max_iter -> {settings.max_iter}"
        state["settings"] = settings
        logger.warning("%s/%s: repair attempt %d (%s) after %s",
                       state["series"].country, state["method"], state["repair_count"], change,
                       state["error"]["message"])
        state["trace"].append(f"Repair attempt {state['repair_count']}: {change}")
        return state

    def _forecasting_node(self, state: EvaluationState) -> EvaluationState:
        method = build_method(state["method"], state["settings"])
        try:
            state["forecasting"] = run_forecasting_task(
                state["series"], method, horizons=state["horizons"], stream=state["stream"])
            failed = len(state["forecasting"].failures)
            state["trace"].append(f"T2 done, {failed} failed origin(s)")
        except (EpimixError, ValueError, ArithmeticError) as exc:
            state["forecasting"] = None
            if state["error"] is None:
                state["error"] = _error_entry(exc, "t2")
            state["trace"].append(f"T2 failed: {exc}")
        return state

    def _finalize_node(self, state: EvaluationState) -> EvaluationState:
        if state["error"] is not None:
            logger.warning("%s/%s: %s unrecovered: %s", state["series"].country, state["method"],
                           state["error"]["task"], state["error"]["message"])
        return state

    def run(self, series: WeeklySeries, method: str, stream: Optional[int] = None) -> Dict[str, Any]:
        initial_state = {
            "series": series,
            "method": method,
            "settings": self.settings,
            "tasks": self.tasks,
            "horizons": self.horizons,
            "stream": country_stream(series.country) if stream is None else stream,
            "modeling": None,
            "forecasting": None,
            "error": None,
            "repair_count": 0,
            "trace": [],
        }

        final_state = self.graph.invoke(initial_state)

        return {
            "country": series.country,
            "method": method,
            "modeling": final_state["modeling"],
            "forecasting": final_state["forecasting"],
            "error": final_state["error"],
            "repair_count": final_state["repair_count"],
            "trace": final_state["trace"],
        }


@dataclass(frozen=True)
class EvaluationJob:
    series: WeeklySeries
    method: str
    settings: MethodSettings
    tasks: tuple
    horizons: tuple


def evaluate_job(job: EvaluationJob) -> Dict[str, Any]:
    """Top-level entry for process pools."""
    pipeline = EvaluationPipeline(job.settings, tasks=job.tasks, horizons=job.horizons)
    return pipeline.run(job.series, job.method)


def unrecovered_exit_code(results: Sequence[Dict[str, Any]]) -> int:
    """Largest exit code among failures that survived every retry (0 if none)."""
    codes = [r["error"]["exit_code"] for r in results if r["error"] is not None]
    return max(codes, default=0)

