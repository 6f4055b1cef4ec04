use crate::kernel::Message;

/// One scripted injection: the environment sends `message` once at least
/// `at_step` deliveries have happened (earlier if the system would
/// otherwise sit idle).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Injection {
    pub at_step: usize,
    pub message: Message,
}

/// Environment script: ordered injections plus an optional delivery
/// budget. A run always stops at quiescence.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Script {
    pub injections: Vec<Injection>,
    pub max_steps: Option<usize>,
}

impl Script {
    pub fn new() -> Self {
        Script::default()
    }

    pub fn inject(mut self, at_step: usize, message: Message) -> Self {
        self.injections.push(Injection { at_step, message });
        self
    }

    pub fn with_max_steps(mut self, max: usize) -> Self {
        self.max_steps = Some(max);
        self
    }
}
