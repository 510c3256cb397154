//! The three classification tasks and a fixed-size container holding one value per task.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Index, IndexMut};

/// One of the jointly trained binary tasks. Offensive is the main task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Offensive,
    Violent,
    Vulgar,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Offensive, Task::Violent, Task::Vulgar];

    pub fn name(self) -> &'static str {
        match self {
            Task::Offensive => "offensive",
            Task::Violent => "violent",
            Task::Vulgar => "vulgar",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A value per task (offensive, violent, vulgar).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTriple<T> {
    pub offensive: T,
    pub violent: T,
    pub vulgar: T,
}

impl<T> TaskTriple<T> {
    pub const fn new(offensive: T, violent: T, vulgar: T) -> Self {
        Self {
            offensive,
            violent,
            vulgar,
        }
    }

    pub fn splat(value: T) -> Self
    where
        T: Clone,
    {
        Self::new(value.clone(), value.clone(), value)
    }

    pub fn from_fn(mut f: impl FnMut(Task) -> T) -> Self {
        Self::new(f(Task::Offensive), f(Task::Violent), f(Task::Vulgar))
    }

    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> TaskTriple<U> {
        TaskTriple::new(f(self.offensive), f(self.violent), f(self.vulgar))
    }

    pub fn zip<U>(self, other: TaskTriple<U>) -> TaskTriple<(T, U)> {
        TaskTriple::new(
            (self.offensive, other.offensive),
            (self.violent, other.violent),
            (self.vulgar, other.vulgar),
        )
    }

    pub fn as_ref(&self) -> TaskTriple<&T> {
        TaskTriple::new(&self.offensive, &self.violent, &self.vulgar)
    }

    /// Iterates in (offensive, violent, vulgar) order.
    pub fn iter(&self) -> impl Iterator<Item = (Task, &T)> {
        Task::ALL.into_iter().map(move |t| (t, &self[t]))
    }

    pub fn values(&self) -> [&T; 3] {
        [&self.offensive, &self.violent, &self.vulgar]
    }
}

impl TaskTriple<f64> {
    pub fn sum(&self) -> f64 {
        self.offensive + self.violent + self.vulgar
    }

    pub fn all_finite(&self) -> bool {
        self.offensive.is_finite() && self.violent.is_finite() && self.vulgar.is_finite()
    }
}

impl<T> Index<Task> for TaskTriple<T> {
    type Output = T;

    fn index(&self, task: Task) -> &T {
        match task {
            Task::Offensive => &self.offensive,
            Task::Violent => &self.violent,
            Task::Vulgar => &self.vulgar,
        }
    }
}

impl<T> IndexMut<Task> for TaskTriple<T> {
    fn index_mut(&mut self, task: Task) -> &mut T {
        match task {
            Task::Offensive => &mut self.offensive,
            Task::Violent => &mut self.violent,
            Task::Vulgar => &mut self.vulgar,
        }
    }
}
