use std::cell::Cell;

use super::{NodeId, PetriNet};

/// Hands out identifiers of the form `{prefix}#{n}` with a strictly
/// increasing counter. Seeding from existing nets keeps new ids clear of
/// everything already in use.
#[derive(Debug, Default)]
pub struct IdSource {
    next: Cell<u64>,
}

impl IdSource {
    pub fn new() -> Self {
        Self::default()
    }

    /// A source whose first id lies above every `#n` suffix in `net`.
    pub fn above(net: &PetriNet) -> Self {
        let src = Self::new();
        src.reserve(net);
        src
    }

    /// Bumps the counter past every `#n` suffix found in `net`.
    pub fn reserve(&self, net: &PetriNet) {
        for id in net.places().iter().chain(net.transitions()) {
            self.reserve_id(id);
        }
    }

    pub fn reserve_id(&self, id: &NodeId) {
        if let Some(n) = suffix_number(id.as_str()) {
            if n >= self.next.get() {
                self.next.set(n + 1);
            }
        }
    }

    pub fn fresh(&self, prefix: &str) -> NodeId {
        let n = self.next.get();
        self.next.set(n + 1);
        NodeId::from(format!("{prefix}#{n}"))
    }

    pub fn place(&self) -> NodeId {
        self.fresh("p")
    }

    pub fn transition(&self) -> NodeId {
        self.fresh("t")
    }
}

fn suffix_number(id: &str) -> Option<u64> {
    let (_, digits) = id.rsplit_once('#')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::super::test_nets::chain_net;
    use super::*;

    #[test]
    fn counts_up() {
        let ids = IdSource::new();
        assert_eq!(ids.place().as_str(), "p#0");
        assert_eq!(ids.transition().as_str(), "t#1");
    }

    #[test]
    fn skips_existing_suffixes() {
        let mut b = super::super::PetriNetBuilder::new();
        b.place("p#17").place("x#3").place("q#").place("r#1a");
        let ids = IdSource::above(&b.build().unwrap());
        assert_eq!(ids.place().as_str(), "p#18");
    }

    #[test]
    fn plain_ids_do_not_bump() {
        let net = chain_net(&[("i", "a"), ("a", "o")]);
        assert_eq!(IdSource::above(&net).place().as_str(), "p#0");
    }
}
