//! Two independent ways to check that a user can rebuild its file.
//!
//! [`constructive_decode`] replays the scheme's XOR chains phase by phase on
//! real payloads. [`span_oracle`] ignores the scheme entirely and asks
//! whether each wanted subfile's unit footprint lies in the GF(2) span of
//! everything the user holds.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::combin::FileSubset;
use crate::delivery::group_files;
use crate::error::DecodeError;
use crate::gf2::Gf2Basis;
use crate::model::{
    subfile_from_index, xor_into, CacheSymbol, Demand, Footprint, Phase, Provenance, SubfileId, SystemParams,
    TransmissionLog,
};
use crate::placement::PlacementResult;

/// What one user has access to: its own cache and the broadcast.
#[derive(Debug, Clone, Copy)]
pub struct UserView<'a> {
    pub params: &'a SystemParams,
    pub user: usize,
    pub demand: &'a Demand,
    pub cache: &'a [CacheSymbol],
    pub log: &'a TransmissionLog,
}

impl<'a> UserView<'a> {
    pub fn new(placement: &'a PlacementResult, log: &'a TransmissionLog, demand: &'a Demand, user: usize) -> Self {
        UserView { params: placement.params(), user, demand, cache: placement.cache(user), log }
    }

    pub fn wanted(&self) -> usize {
        self.demand.of(self.user)
    }

    /// Every subfile of the requested file, in file order.
    pub fn wanted_subfiles(&self) -> impl Iterator<Item = SubfileId> + '_ {
        let spf = self.params.subfiles_per_file();
        let base = (self.wanted() - 1) * spf;
        (base..base + spf).map(|i| subfile_from_index(self.params, i).expect("index in range"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum StepTarget {
    Subfile(SubfileId),
    /// XOR of the selected subfiles of a leader group not assigned the
    /// user's own file.
    GroupCombination(Vec<usize>),
}

/// One XOR computation: `operands` payloads combined into `target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodeStep {
    pub phase: Phase,
    pub target: StepTarget,
    pub operands: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedFile {
    pub payload: Vec<u8>,
    pub steps: Vec<DecodeStep>,
}

impl DecodedFile {
    /// Subfiles recovered in `phase`, in order.
    pub fn recovered_in(&self, phase: Phase) -> Vec<SubfileId> {
        self.steps
            .iter()
            .filter(|s| s.phase == phase)
            .filter_map(|s| match &s.target {
                StepTarget::Subfile(id) => Some(*id),
                StepTarget::GroupCombination(_) => None,
            })
            .collect()
    }
}

struct Workspace {
    known: HashMap<SubfileId, Vec<u8>>,
    steps: Vec<DecodeStep>,
}

impl Workspace {
    fn get(&self, id: &SubfileId, phase: Phase) -> Result<&[u8], DecodeError> {
        self.known.get(id).map(Vec::as_slice).ok_or(DecodeError::MissingOperand { subfile: *id, phase })
    }

    fn learn(&mut self, phase: Phase, id: SubfileId, payload: Vec<u8>, operands: usize) {
        self.known.insert(id, payload);
        self.steps.push(DecodeStep { phase, target: StepTarget::Subfile(id), operands });
    }
}

/// Phase whose messages should deliver `id` to a user requesting `id.file`.
fn expected_phase(view: &UserView<'_>, id: &SubfileId) -> Phase {
    let requested = view.demand.requested();
    if !id.subset.is_subset_of(&requested) {
        return Phase::TypeI;
    }
    let owner_wants = view.demand.of(id.user);
    if !id.subset.contains(owner_wants) {
        Phase::TypeIIIPhase2
    } else if owner_wants == id.file && id.user != view.user {
        Phase::TypeIIPhase2
    } else {
        Phase::TypeIIPhase1
    }
}

fn own_symbol<'v>(view: &UserView<'v>, subset: &FileSubset) -> Option<&'v CacheSymbol> {
    view.cache.iter().find(|s| s.subset == *subset)
}

/// Rebuilds the requested file following the scheme's phase order.
pub fn constructive_decode(view: &UserView<'_>) -> Result<DecodedFile, DecodeError> {
    let me = view.user;
    let want = view.wanted();
    let requested = view.demand.requested();
    let mut ws = Workspace { known: HashMap::new(), steps: Vec::new() };

    for m in view.log.in_phase(Phase::TypeI) {
        let Provenance::Uncoded { subfile } = &m.provenance else {
            return Err(DecodeError::MalformedLog("Type I message is not uncoded".into()));
        };
        ws.learn(Phase::TypeI, *subfile, m.payload.clone(), 1);
    }

    // Type II, phase 1: direct pickups, then strip companions from own symbols
    for m in view.log.in_phase(Phase::TypeIIPhase1) {
        let Provenance::Uncoded { subfile } = &m.provenance else {
            return Err(DecodeError::MalformedLog("II-P1 message is not uncoded".into()));
        };
        ws.learn(Phase::TypeIIPhase1, *subfile, m.payload.clone(), 1);
    }
    for sym in view.cache.iter().filter(|s| s.subset.contains(want) && s.subset.is_subset_of(&requested)) {
        let mut acc = sym.payload.clone();
        let mut operands = 1;
        for f in sym.subset.members().filter(|&f| f != want) {
            xor_into(&mut acc, ws.get(&SubfileId::new(f, me, sym.subset), Phase::TypeIIPhase1)?);
            operands += 1;
        }
        ws.learn(Phase::TypeIIPhase1, SubfileId::new(want, me, sym.subset), acc, operands);
    }

    // Type II, phase 2: recover the leader's piece from our own exchange,
    // then every other member's piece from the leader's
    let exchanges: Vec<(&[u8], FileSubset, usize, usize)> = view
        .log
        .in_phase(Phase::TypeIIPhase2)
        .filter_map(|m| match &m.provenance {
            Provenance::LeaderExchange { file, subset, member, leader } if *file == want => {
                Some((m.payload.as_slice(), *subset, *member, *leader))
            }
            _ => None,
        })
        .collect();
    for &(payload, subset, _, leader) in exchanges.iter().filter(|e| e.2 == me) {
        let mut acc = payload.to_vec();
        xor_into(&mut acc, ws.get(&SubfileId::new(want, me, subset), Phase::TypeIIPhase2)?);
        ws.learn(Phase::TypeIIPhase2, SubfileId::new(want, leader, subset), acc, 2);
    }
    for &(payload, subset, member, leader) in exchanges.iter().filter(|e| e.2 != me) {
        let mut acc = payload.to_vec();
        xor_into(&mut acc, ws.get(&SubfileId::new(want, leader, subset), Phase::TypeIIPhase2)?);
        ws.learn(Phase::TypeIIPhase2, SubfileId::new(want, member, subset), acc, 2);
    }

    // Type III, phase 1: own symbol XOR own pairings telescopes to the sum of
    // selected subfiles not assigned our file
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for m in view.log.in_phase(Phase::TypeIIIPhase1).chain(view.log.in_phase(Phase::TypeIIIPhase2)) {
        let group = match &m.provenance {
            Provenance::GroupPair { group, .. } | Provenance::GroupSum { group, .. } => group,
            _ => return Err(DecodeError::MalformedLog("Type III message without a group".into())),
        };
        if !groups.contains(group) {
            groups.push(group.clone());
        }
    }
    let mut partial: BTreeMap<Vec<usize>, Vec<u8>> = BTreeMap::new();
    for group in groups.iter().filter(|g| group_files(g, view.demand).contains(want)) {
        let files = group_files(group, view.demand);
        let sym = own_symbol(view, &files.without(want))
            .ok_or_else(|| DecodeError::MalformedLog(format!("no cached symbol for {}", files.without(want))))?;
        let mut acc = sym.payload.clone();
        let mut operands = 1;
        for m in view.log.in_phase(Phase::TypeIIIPhase1) {
            if let Provenance::GroupPair { group: g, owner, .. } = &m.provenance {
                if g == group && *owner == me {
                    xor_into(&mut acc, &m.payload);
                    operands += 1;
                }
            }
        }
        ws.steps.push(DecodeStep {
            phase: Phase::TypeIIIPhase1,
            target: StepTarget::GroupCombination(group.clone()),
            operands,
        });
        partial.insert(group.clone(), acc);
    }

    // Type III, phase 2: the group sum isolates the selected subfile of our
    // file, which unlocks every pairing message carrying our file
    for m in view.log.in_phase(Phase::TypeIIIPhase2) {
        let Provenance::GroupSum { group, selected } = &m.provenance else {
            return Err(DecodeError::MalformedLog("III-P2 message is not a group sum".into()));
        };
        let Some(acc) = partial.get(group) else {
            continue;
        };
        let pick = *selected
            .iter()
            .find(|s| s.file == want)
            .ok_or_else(|| DecodeError::MalformedLog(format!("group {group:?} selected nothing of file {want}")))?;
        let mut value = acc.clone();
        xor_into(&mut value, &m.payload);
        ws.learn(Phase::TypeIIIPhase2, pick, value.clone(), 2);

        let files = group_files(group, view.demand);
        for pm in view.log.in_phase(Phase::TypeIIIPhase1) {
            if let Provenance::GroupPair { group: g, owner, partner, file } = &pm.provenance {
                if g == group && *file == want && *partner == pick.user {
                    let mut out = pm.payload.clone();
                    xor_into(&mut out, &value);
                    let id = SubfileId::new(want, *owner, files.without(view.demand.of(*owner)));
                    ws.learn(Phase::TypeIIIPhase2, id, out, 2);
                }
            }
        }
    }

    let mut payload = Vec::with_capacity(view.params.file_bytes());
    for id in view.wanted_subfiles() {
        match ws.known.get(&id) {
            Some(p) => payload.extend_from_slice(p),
            None => return Err(DecodeError::Unrecovered { subfile: id, phase: expected_phase(view, &id) }),
        }
    }
    Ok(DecodedFile { payload, steps: ws.steps })
}

/// Outcome of the span check for one user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub decodable: bool,
    /// Rank of the user's cache and broadcast footprints.
    pub rank: usize,
    pub rows: usize,
    pub targets: usize,
    /// Wanted subfiles outside the span.
    pub unreachable: Vec<SubfileId>,
}

/// Decodability by Gaussian elimination over GF(2) on footprints alone.
pub fn span_oracle(view: &UserView<'_>) -> OracleReport {
    let dim = view.params.subfile_count();
    let mut basis = Gf2Basis::new(dim);
    let rows: Vec<&Footprint> =
        view.cache.iter().map(|s| &s.footprint).chain(view.log.messages().iter().map(|m| &m.footprint)).collect();
    for r in &rows {
        basis.insert(r);
    }
    let spf = view.params.subfiles_per_file();
    let base = (view.wanted() - 1) * spf;
    let unreachable: Vec<SubfileId> = (base..base + spf)
        .filter(|&i| !basis.contains(&Footprint::unit(dim, i)))
        .map(|i| subfile_from_index(view.params, i).expect("index in range"))
        .collect();
    OracleReport { decodable: unreachable.is_empty(), rank: basis.rank(), rows: rows.len(), targets: spf, unreachable }
}

/// Decode and oracle results for one user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserOutcome {
    pub user: usize,
    pub wanted: usize,
    /// Constructive decode finished and matched the library byte for byte.
    pub decoded: bool,
    pub error: Option<String>,
    pub steps: usize,
    pub oracle: Option<OracleReport>,
}

impl UserOutcome {
    /// Decoded, and the oracle (if run) agrees.
    pub fn ok(&self) -> bool {
        self.decoded && self.oracle.as_ref().is_none_or(|o| o.decodable)
    }

    /// Decode and oracle reached the same verdict.
    pub fn agrees(&self) -> bool {
        self.oracle.as_ref().is_none_or(|o| o.decodable == self.decoded)
    }
}

/// Runs every user's decode (and optionally the oracle) in parallel;
/// results are in user order.
pub fn decode_all(
    placement: &PlacementResult,
    log: &TransmissionLog,
    demand: &Demand,
    oracle: bool,
) -> Vec<UserOutcome> {
    use rayon::prelude::*;
    (1..=placement.params().users())
        .into_par_iter()
        .map(|user| {
            let view = UserView::new(placement, log, demand, user);
            let wanted = view.wanted();
            let (decoded, error, steps) = match constructive_decode(&view) {
                Ok(out) if out.payload == placement.library().file(wanted) => (true, None, out.steps.len()),
                Ok(out) => (false, Some("decoded payload differs from the library".to_string()), out.steps.len()),
                Err(e) => (false, Some(e.to_string()), 0),
            };
            UserOutcome { user, wanted, decoded, error, steps, oracle: oracle.then(|| span_oracle(&view)) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delivery::{deliver, select_leaders};
    use crate::model::Library;
    use crate::placement::build_placement;

    fn run(n: usize, k: usize, g: usize, d: &[usize], seed: u64) -> (PlacementResult, Demand, TransmissionLog) {
        let p = SystemParams::new(n, k, g, 8).unwrap();
        let pl = build_placement(&p, Library::generate(&p, seed)).unwrap();
        let demand = Demand::new(&p, d.to_vec()).unwrap();
        let log = deliver(&pl, &demand, &select_leaders(&demand)).unwrap();
        (pl, demand, log)
    }

    #[test]
    fn every_user_recovers_its_file() {
        let (pl, d, log) = run(4, 5, 2, &[3, 1, 3, 4, 1], 99);
        for user in 1..=5 {
            let view = UserView::new(&pl, &log, &d, user);
            let out = constructive_decode(&view).unwrap();
            assert_eq!(out.payload, pl.library().file(d.of(user)));
            assert!(span_oracle(&view).decodable);
        }
    }

    #[test]
    fn group_one_steps_combine_at_most_two() {
        let (pl, d, log) = run(3, 5, 1, &[1, 2, 3, 1, 2], 5);
        for user in 1..=5 {
            let out = constructive_decode(&UserView::new(&pl, &log, &d, user)).unwrap();
            assert!(out.steps.iter().all(|s| s.operands <= 2));
            assert_eq!(out.payload, pl.library().file(d.of(user)));
        }
    }

    #[test]
    fn empty_log_is_not_decodable() {
        let (pl, d, _) = run(3, 6, 2, &[1, 1, 2, 2, 3, 3], 1);
        let empty = TransmissionLog::new();
        let view = UserView::new(&pl, &empty, &d, 1);
        let report = span_oracle(&view);
        assert!(!report.decodable);
        assert_eq!(report.rank, 3);
        assert_eq!(report.unreachable.len(), 12);
        assert!(matches!(
            constructive_decode(&view),
            Err(DecodeError::MissingOperand { phase: Phase::TypeIIPhase1, .. })
        ));
    }

    #[test]
    fn dropped_group_sum_breaks_type3_users() {
        let (pl, d, mut log) = run(3, 6, 2, &[1, 1, 2, 2, 3, 3], 1);
        let last = log.pop().unwrap();
        assert_eq!(last.phase, Phase::TypeIIIPhase2);
        for user in 1..=6 {
            let view = UserView::new(&pl, &log, &d, user);
            assert!(!span_oracle(&view).decodable);
            match constructive_decode(&view) {
                Err(DecodeError::Unrecovered { phase, .. }) => assert_eq!(phase, Phase::TypeIIIPhase2),
                other => panic!("user {user}: {other:?}"),
            }
        }
    }

    #[test]
    fn dropped_companion_is_a_missing_operand() {
        let (pl, d, log) = run(3, 6, 2, &[1, 1, 2, 2, 3, 3], 1);
        let mut tampered = TransmissionLog::new();
        // drop the first II-P1 message: W_{2,{1,2}}^{(1)}
        let mut dropped = false;
        for m in log.messages() {
            if !dropped && m.phase == Phase::TypeIIPhase1 {
                dropped = true;
                continue;
            }
            tampered.push(m.clone());
        }
        let err = constructive_decode(&UserView::new(&pl, &tampered, &d, 1)).unwrap_err();
        let expected = SubfileId::new(2, 1, FileSubset::from_members(&[1, 2]).unwrap());
        assert_eq!(err, DecodeError::MissingOperand { subfile: expected, phase: Phase::TypeIIPhase1 });
    }
}
