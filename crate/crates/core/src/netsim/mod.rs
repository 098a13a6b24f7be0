//! Scenario-driven network simulation: passes, distillation, relaying and
//! application workloads on a single event clock.

mod channel;
mod report;
mod run;
mod scenario;

pub use channel::{classical_transfer_time, ChannelKind, ClassicalChannel, Direction};
pub use report::{
    apps_csv, events_log, load_store, passes_csv, pools_csv, run_state, state_of, write_run_dir, write_store,
    BlockMeta, PoolState, RunState, APPS_CSV_HEADER, KEYS_DIR, POOLS_CSV_HEADER, STATE_FILE,
};
pub use run::{balances, run_scenario, AppRecord, AppStatus, Event, EventKind, PassSummary, PoolBalance, RunError, RunReport};
pub use scenario::{
    parse_date, validate_scenario, FiberChain, PassModel, PassSpec, ReceiverSpec, Scenario, ScenarioError, WorkItem,
    DATE_FORMAT,
};
