//! Bounded worker pool with a hard per-task deadline.
//!
//! Each task runs on its own thread; a dispatcher waits `task_deadline` for
//! the result and then abandons the thread, so one stuck fetch cannot stall
//! the batch. Abandoned tasks see their cancel flag flip and are expected
//! to bail out at the next opportunity; ones that never check it die with
//! the process.

use std::collections::VecDeque;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

pub const DEFAULT_TASK_DEADLINE: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct WorkerConfig {
    jobs: usize,
    task_deadline: Duration,
}

impl WorkerConfig {
    /// Clamps to at least one worker and a positive deadline.
    pub fn new(jobs: usize, task_deadline: Duration) -> WorkerConfig {
        WorkerConfig {
            jobs: jobs.max(1),
            task_deadline: task_deadline.max(Duration::from_millis(1)),
        }
    }

    /// One worker per available processor.
    pub fn detect(task_deadline: Duration) -> WorkerConfig {
        let jobs = thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        WorkerConfig::new(jobs, task_deadline)
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn task_deadline(&self) -> Duration {
        self.task_deadline
    }
}

impl Default for WorkerConfig {
    fn default() -> WorkerConfig {
        WorkerConfig::detect(DEFAULT_TASK_DEADLINE)
    }
}

/// Flag handed to each task; flips to true when the pool has given up on
/// the task. Long-running tasks should poll it at natural checkpoints.
#[derive(Debug, Clone, Default)]
pub struct CancelFlag(Arc<AtomicBool>);

impl CancelFlag {
    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }

    fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskOutcome<R> {
    Done(R),
    Failed(String),
    TimedOut(Duration),
    Panicked(String),
}

impl<R> TaskOutcome<R> {
    pub fn is_done(&self) -> bool {
        matches!(self, TaskOutcome::Done(_))
    }
}

/// Runs `task` over `items` with at most `jobs` tasks in flight. Outcomes
/// come back in input order regardless of completion order, so the result
/// is deterministic for any worker count.
pub fn run_parallel<T, R, F>(
    items: Vec<T>,
    config: &WorkerConfig,
    task: F,
) -> Vec<(T, TaskOutcome<R>)>
where
    T: Clone + Send + 'static,
    R: Send + 'static,
    F: Fn(T, CancelFlag) -> Result<R, String> + Send + Sync + 'static,
{
    let count = items.len();
    let task = Arc::new(task);
    let queue: Arc<Mutex<VecDeque<(usize, T)>>> =
        Arc::new(Mutex::new(items.iter().cloned().enumerate().collect()));
    let slots: Arc<Mutex<Vec<Option<TaskOutcome<R>>>>> =
        Arc::new(Mutex::new((0..count).map(|_| None).collect()));

    let mut dispatchers = Vec::new();
    for _ in 0..config.jobs.min(count.max(1)) {
        let task = Arc::clone(&task);
        let queue = Arc::clone(&queue);
        let slots = Arc::clone(&slots);
        let deadline = config.task_deadline;
        dispatchers.push(thread::spawn(move || loop {
            let (index, item) = match queue.lock().expect("task queue poisoned").pop_front() {
                Some(next) => next,
                None => break,
            };
            let outcome = supervise(Arc::clone(&task), item, deadline);
            slots.lock().expect("result slots poisoned")[index] = Some(outcome);
        }));
    }
    for dispatcher in dispatchers {
        dispatcher.join().expect("dispatcher panicked");
    }
    drop(task);

    let outcomes = Arc::try_unwrap(slots)
        .ok()
        .expect("dispatchers gone")
        .into_inner()
        .expect("result slots poisoned");
    items
        .into_iter()
        .zip(outcomes)
        .map(|(item, outcome)| (item, outcome.expect("every slot filled")))
        .collect()
}

/// Runs one task on a fresh thread and waits at most `deadline` for it.
/// The task owns an `Arc` of the closure, so a timed-out worker can keep
/// running harmlessly after this frame returns.
fn supervise<T, R, F>(task: Arc<F>, item: T, deadline: Duration) -> TaskOutcome<R>
where
    T: Send + 'static,
    R: Send + 'static,
    F: Fn(T, CancelFlag) -> Result<R, String> + Send + Sync + 'static,
{
    let flag = CancelFlag::default();
    let worker_flag = flag.clone();
    let (sender, receiver) = mpsc::channel();
    let worker = thread::Builder::new()
        .name("pipeline-task".to_string())
        .spawn(move || {
            let result = catch_unwind(AssertUnwindSafe(|| task(item, worker_flag)));
            let outcome = match result {
                Ok(Ok(value)) => TaskOutcome::Done(value),
                Ok(Err(message)) => TaskOutcome::Failed(message),
                Err(payload) => TaskOutcome::Panicked(panic_message(payload.as_ref())),
            };
            let _ = sender.send(outcome);
        })
        .expect("spawn worker thread");

    match receiver.recv_timeout(deadline) {
        Ok(outcome) => {
            let _ = worker.join();
            outcome
        }
        Err(RecvTimeoutError::Timeout) => {
            flag.cancel();
            // Deliberately not joined: the thread is a zombie until it
            // notices the flag or the process exits.
            TaskOutcome::TimedOut(deadline)
        }
        Err(RecvTimeoutError::Disconnected) => {
            TaskOutcome::Panicked("worker exited without a result".to_string())
        }
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(text) = payload.downcast_ref::<&str>() {
        (*text).to_string()
    } else if let Some(text) = payload.downcast_ref::<String>() {
        text.clone()
    } else {
        "opaque panic payload".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Instant;

    #[test]
    fn instant_tasks_all_complete() {
        let config = WorkerConfig::new(8, Duration::from_secs(5));
        let results = run_parallel((0..100).collect(), &config, |n: i32, _| Ok(n * 2));
        assert_eq!(results.len(), 100);
        assert!(results.iter().all(|(_, outcome)| outcome.is_done()));
        assert_eq!(results[41], (41, TaskOutcome::Done(82)));
    }

    #[test]
    fn outcomes_keep_input_order_for_any_worker_count() {
        let run = |jobs| {
            run_parallel((0..50).collect(), &WorkerConfig::new(jobs, Duration::from_secs(5)), {
                |n: u64, _| {
                    // Finish in scrambled order.
                    thread::sleep(Duration::from_millis((n % 3) * 2));
                    Ok(n * n)
                }
            })
        };
        assert_eq!(run(1), run(8));
    }

    #[test]
    fn stalled_task_times_out_within_grace() {
        let config = WorkerConfig::new(2, Duration::from_millis(200));
        let started = Instant::now();
        let results = run_parallel(vec![1u8], &config, |_, _| {
            thread::sleep(Duration::from_secs(60));
            Ok(())
        });
        assert!(started.elapsed() < Duration::from_secs(2));
        assert_eq!(results[0].1, TaskOutcome::TimedOut(Duration::from_millis(200)));
    }

    #[test]
    fn timed_out_task_sees_its_cancel_flag() {
        let hit = Arc::new(AtomicBool::new(false));
        let observer = Arc::clone(&hit);
        let config = WorkerConfig::new(1, Duration::from_millis(50));
        run_parallel(vec![()], &config, move |_, cancel: CancelFlag| {
            while !cancel.is_cancelled() {
                thread::sleep(Duration::from_millis(5));
            }
            observer.store(true, Ordering::Relaxed);
            Ok(())
        });
        thread::sleep(Duration::from_millis(150));
        assert!(hit.load(Ordering::Relaxed));
    }

    #[test]
    fn panics_are_contained_and_reported() {
        let config = WorkerConfig::new(4, Duration::from_secs(5));
        let results = run_parallel(vec![1, 2, 3], &config, |n: i32, _| {
            if n == 2 {
                panic!("boom on {n}");
            }
            Ok(n)
        });
        assert!(results[0].1.is_done());
        assert_eq!(results[1].1, TaskOutcome::Panicked("boom on 2".to_string()));
        assert!(results[2].1.is_done());
    }

    #[test]
    fn failures_carry_the_task_message() {
        let config = WorkerConfig::new(2, Duration::from_secs(5));
        let results = run_parallel(vec!["bad"], &config, |item: &'static str, _| {
            Err::<(), _>(format!("cannot process {item}"))
        });
        assert_eq!(
            results[0].1,
            TaskOutcome::Failed("cannot process bad".to_string())
        );
    }

    #[test]
    fn config_clamps_to_sane_minimums() {
        let config = WorkerConfig::new(0, Duration::ZERO);
        assert_eq!(config.jobs(), 1);
        assert!(config.task_deadline() > Duration::ZERO);
        assert_eq!(WorkerConfig::default().task_deadline(), DEFAULT_TASK_DEADLINE);
    }

    #[test]
    fn empty_input_returns_immediately() {
        let config = WorkerConfig::default();
        let results: Vec<(u8, TaskOutcome<u8>)> = run_parallel(Vec::new(), &config, |n, _| Ok(n));
        assert!(results.is_empty());
    }
}
