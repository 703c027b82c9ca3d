use super::{
    final_states, simulate_backward, simulate_forward, simulate_unitary_only, Direction, Label, ProtocolConfig,
    TrajectoryRecord,
};
use crate::{Error, Result};

/// A named way of producing a labelled trajectory dataset from a config.
pub trait TrajectorySource: Send + Sync {
    fn name(&self) -> &'static str;

    fn label(&self) -> Label;

    fn generate(&self, config: &ProtocolConfig, count: usize) -> Result<Vec<TrajectoryRecord>>;
}

struct Forward;

impl TrajectorySource for Forward {
    fn name(&self) -> &'static str {
        "forward"
    }

    fn label(&self) -> Label {
        Label::Forward
    }

    fn generate(&self, config: &ProtocolConfig, count: usize) -> Result<Vec<TrajectoryRecord>> {
        simulate_forward(config, count)
    }
}

/// Seeds from the finals of the forward dataset generated with the same
/// config and count.
struct Backward;

impl TrajectorySource for Backward {
    fn name(&self) -> &'static str {
        "backward"
    }

    fn label(&self) -> Label {
        Label::Backward
    }

    fn generate(&self, config: &ProtocolConfig, count: usize) -> Result<Vec<TrajectoryRecord>> {
        let finals = final_states(&simulate_forward(config, count)?);
        simulate_backward(config, &finals, count)
    }
}

struct UnitaryOnly(Direction);

impl TrajectorySource for UnitaryOnly {
    fn name(&self) -> &'static str {
        match self.0 {
            Direction::Forward => "unitary-only",
            Direction::Reverse => "unitary-only-reverse",
        }
    }

    fn label(&self) -> Label {
        match self.0 {
            Direction::Forward => Label::Forward,
            Direction::Reverse => Label::Backward,
        }
    }

    fn generate(&self, config: &ProtocolConfig, count: usize) -> Result<Vec<TrajectoryRecord>> {
        simulate_unitary_only(config, count, self.0)
    }
}

/// Trajectory sources by name.
pub struct SourceRegistry {
    sources: Vec<Box<dyn TrajectorySource>>,
}

impl Default for SourceRegistry {
    fn default() -> Self {
        Self {
            sources: vec![
                Box::new(Forward),
                Box::new(Backward),
                Box::new(UnitaryOnly(Direction::Forward)),
                Box::new(UnitaryOnly(Direction::Reverse)),
            ],
        }
    }
}

impl SourceRegistry {
    pub fn register(&mut self, source: Box<dyn TrajectorySource>) -> Result<()> {
        if self.sources.iter().any(|s| s.name() == source.name()) {
            return Err(Error::InvalidArgument(format!(
                "source {:?} already registered",
                source.name()
            )));
        }
        self.sources.push(source);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&dyn TrajectorySource> {
        self.sources
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown trajectory source {name:?} (expected one of {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.sources.iter().map(|s| s.name()).collect()
    }
}
