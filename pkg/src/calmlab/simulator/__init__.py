from .network import (HEARTBEAT_PROBABILITY, Envelope, Event, FairScheduler, Mode,
                      NetworkState, RunConfig, RunResult, ScenarioError, format_trace,
                      heartbeat_round, run, run_fixed_schedule,
                      fixed_schedule_round, run_heartbeat_only,
                      validate_scenario)
from .experiments import (ExplorationBudgetExceeded, ExploreVerdict, Failure,
                          IndistinguishabilityReport, Verdict, arbitrary_policies,
                          check_computes, check_coordination_free, compatible_policies,
                          explore_schedules, indistinguishability)
