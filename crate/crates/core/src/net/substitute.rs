use super::{NetError, NodeId, PetriNet, WorkflowNet};

impl PetriNet {
    /// Replaces transition `t` by the workflow net `sub`.
    ///
    /// The source and sink of `sub` disappear; transitions that consumed from
    /// the source now consume from every input place of `t`, and transitions
    /// producing into the sink now produce into every output place of `t`.
    pub fn substitute(&self, t: &NodeId, sub: &WorkflowNet) -> Result<PetriNet, NetError> {
        let ti = self.transition_index(t)?;
        let inner = sub.net();
        for id in inner.places().iter().chain(inner.transitions()) {
            if self.contains(id) {
                return Err(NetError::IdentifierCollision(id.clone()));
            }
        }
        let (src, sink) = (sub.source(), sub.sink());

        let places = self.places().iter().cloned().chain(
            (0..inner.place_count())
                .filter(|&p| p != src && p != sink)
                .map(|p| inner.place_id(p).clone()),
        );
        let transitions = (0..self.transition_count())
            .filter(|&u| u != ti)
            .map(|u| (self.transition_id(u).clone(), self.label(u).clone()))
            .chain(
                inner
                    .transitions()
                    .iter()
                    .cloned()
                    .zip(inner.labels().iter().cloned()),
            );

        let mut arcs: Vec<(NodeId, NodeId)> = self.arcs().filter(|(a, b)| a != t && b != t).collect();
        let (src_id, sink_id) = (sub.source_id(), sub.sink_id());
        arcs.extend(
            inner
                .arcs()
                .filter(|(a, b)| a != src_id && b != src_id && a != sink_id && b != sink_id),
        );
        for &p in self.transition_pre(ti) {
            for &u in inner.place_post(src) {
                arcs.push((self.place_id(p).clone(), inner.transition_id(u).clone()));
            }
        }
        for &p in self.transition_post(ti) {
            for &u in inner.place_pre(sink) {
                arcs.push((inner.transition_id(u).clone(), self.place_id(p).clone()));
            }
        }
        PetriNet::from_parts(places, transitions, arcs)
    }
}
