//! Delivery: classify every cached symbol against the demand and emit the
//! broadcast in five consecutive phases.
//!
//! With `R` the set of requested files, a symbol `Z_A^{(i)}` is
//!
//! * Type I when `A` mixes requested and unrequested files: its requested
//!   subfiles are sent uncoded;
//! * Type II when `A ⊆ R` and `d(i) ∈ A`: phase 1 sends the `g-1`
//!   companions of the owner's own subfile, phase 2 lets each demand group
//!   share what it decoded through a leader;
//! * Type III when `A ⊆ R` and `d(i) ∉ A`: handled per group `V` of `g+1`
//!   leaders with distinct demands `B(V)`, one pairing message per
//!   non-selected subfile and one XOR of all selected subfiles;
//! * all-unrequested when `A ∩ R = ∅`: nothing to deliver.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::combin::{choose, enumerate_subsets, ratio, FileSubset, Rational};
use crate::error::{Error, Result};
use crate::model::{
    cache_subsets, subfile_index, xor_into, BroadcastMessage, Demand, Footprint, Phase, Provenance, SubfileId,
    SystemParams, TransmissionLog,
};
use crate::placement::PlacementResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SymbolClass {
    TypeI,
    TypeII,
    TypeIII,
    AllUnrequested,
}

/// Class of `Z_A^{(user)}` under `demand`.
pub fn classify_symbol(demand: &Demand, user: usize, subset: &FileSubset) -> SymbolClass {
    let requested = demand.requested();
    if !subset.intersects(&requested) {
        SymbolClass::AllUnrequested
    } else if !subset.is_subset_of(&requested) {
        SymbolClass::TypeI
    } else if subset.contains(demand.of(user)) {
        SymbolClass::TypeII
    } else {
        SymbolClass::TypeIII
    }
}

/// Class of every cached symbol, indexed by user then subset rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    subsets: Vec<FileSubset>,
    classes: Vec<Vec<SymbolClass>>,
}

impl Classification {
    pub fn class(&self, user: usize, subset: &FileSubset) -> SymbolClass {
        let pos = self.subsets.binary_search(subset).expect("subset of the right size");
        self.classes[user - 1][pos]
    }

    /// `(user, subset, class)` in user-major, lexicographic subset order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, FileSubset, SymbolClass)> + '_ {
        self.classes
            .iter()
            .enumerate()
            .flat_map(move |(u, row)| row.iter().zip(&self.subsets).map(move |(&c, &s)| (u + 1, s, c)))
    }

    pub fn count(&self, class: SymbolClass) -> usize {
        self.iter().filter(|(_, _, c)| *c == class).count()
    }
}

pub fn classify_symbols(placement: &PlacementResult, demand: &Demand) -> Classification {
    let params = placement.params();
    let subsets = cache_subsets(params);
    let classes =
        (1..=params.users()).map(|u| subsets.iter().map(|s| classify_symbol(demand, u, s)).collect()).collect();
    Classification { subsets, classes }
}

/// One leader per requested file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeaderSet {
    by_file: BTreeMap<usize, usize>,
}

impl LeaderSet {
    pub fn new(by_file: BTreeMap<usize, usize>) -> Self {
        LeaderSet { by_file }
    }

    pub fn leader_of(&self, file: usize) -> Option<usize> {
        self.by_file.get(&file).copied()
    }

    pub fn is_leader(&self, user: usize) -> bool {
        self.by_file.values().any(|&u| u == user)
    }

    /// Leader users, ascending.
    pub fn users(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.by_file.values().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn by_file(&self) -> &BTreeMap<usize, usize> {
        &self.by_file
    }

    pub fn validate(&self, demand: &Demand) -> Result<()> {
        let requested = demand.requested();
        if self.by_file.len() != requested.len() {
            return Err(Error::InconsistentLeaders(format!(
                "{} leaders for {} requested files",
                self.by_file.len(),
                requested.len()
            )));
        }
        for (&file, &user) in &self.by_file {
            if !requested.contains(file) {
                return Err(Error::InconsistentLeaders(format!("file {file} is not requested")));
            }
            if user == 0 || user > demand.as_slice().len() || demand.of(user) != file {
                return Err(Error::InconsistentLeaders(format!("user {user} does not request file {file}")));
            }
        }
        Ok(())
    }
}

/// The lowest-index requester of each requested file leads its group.
pub fn select_leaders(demand: &Demand) -> LeaderSet {
    let mut by_file = BTreeMap::new();
    for (k, &f) in demand.as_slice().iter().enumerate() {
        by_file.entry(f).or_insert(k + 1);
    }
    LeaderSet { by_file }
}

/// Fixed-point-free assignment `r_V` of files in `B(V)` to the leaders of a
/// group `V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RvAssignment {
    /// `(leader, assigned file)`, ascending by leader.
    pairs: Vec<(usize, usize)>,
}

impl RvAssignment {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn file_of(&self, leader: usize) -> Option<usize> {
        self.pairs.iter().find(|(u, _)| *u == leader).map(|&(_, f)| f)
    }

    /// The leader whose assigned file is `file`.
    pub fn leader_for(&self, file: usize) -> Option<usize> {
        self.pairs.iter().find(|(_, f)| *f == file).map(|&(u, _)| u)
    }
}

/// Sort the group by demanded file and hand each member the file of the
/// next member, cyclically.
pub fn assign_rv(group: &[usize], demand: &Demand) -> Result<RvAssignment> {
    if group.len() < 2 {
        return Err(Error::InvalidInput(format!("group of {} users has no derangement", group.len())));
    }
    let mut by_file: Vec<(usize, usize)> = group.iter().map(|&u| (demand.of(u), u)).collect();
    by_file.sort_unstable();
    if by_file.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput("group members must request distinct files".into()));
    }
    let m = by_file.len();
    let mut pairs: Vec<(usize, usize)> = (0..m).map(|j| (by_file[j].1, by_file[(j + 1) % m].0)).collect();
    pairs.sort_unstable();
    Ok(RvAssignment { pairs })
}

/// Closed-form message counts of every phase for a demand with `ne`
/// distinct requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseCounts {
    pub type1: u64,
    pub type2_phase1: u64,
    pub type2_phase2: u64,
    pub type3_phase1_leaders: u64,
    pub type3_phase1_others: u64,
    pub type3_phase2: u64,
}

impl PhaseCounts {
    pub fn closed_form(params: &SystemParams, ne: usize) -> Self {
        let k = params.users() as u64;
        let g = params.group();
        let per = params.subfiles_per_user_file() as u64;
        let ne64 = ne as u64;
        let inner = choose(ne - 1, g - 1);
        let groups = choose(ne, g + 1);
        PhaseCounts {
            type1: k * ne64 * (per - inner),
            type2_phase1: k * (g as u64 - 1) * inner,
            type2_phase2: (k - ne64) * inner,
            type3_phase1_leaders: groups * (g as u64 - 1) * (g as u64 + 1),
            type3_phase1_others: g as u64 * (k - ne64) * choose(ne - 1, g),
            type3_phase2: groups,
        }
    }

    pub fn type2(&self) -> u64 {
        self.type2_phase1 + self.type2_phase2
    }

    pub fn type3_phase1(&self) -> u64 {
        self.type3_phase1_leaders + self.type3_phase1_others
    }

    pub fn type3(&self) -> u64 {
        self.type3_phase1() + self.type3_phase2
    }

    pub fn total(&self) -> u64 {
        self.type1 + self.type2() + self.type3()
    }

    pub fn of_phase(&self, phase: Phase) -> u64 {
        match phase {
            Phase::TypeI => self.type1,
            Phase::TypeIIPhase1 => self.type2_phase1,
            Phase::TypeIIPhase2 => self.type2_phase2,
            Phase::TypeIIIPhase1 => self.type3_phase1(),
            Phase::TypeIIIPhase2 => self.type3_phase2,
        }
    }
}

/// Type II total in factored form, `(Kg - Ne) C(Ne-1, g-1)`.
pub fn type2_factored(params: &SystemParams, ne: usize) -> u64 {
    (params.users() * params.group() - ne) as u64 * choose(ne - 1, params.group() - 1)
}

/// Type III total in the fractional form `C(Ne-1,g-1) (Ne-g) (K - Ne/(g+1))`.
pub fn type3_fractional(params: &SystemParams, ne: usize) -> Rational {
    let g = params.group() as i64;
    let ne_i = ne as i64;
    let lead = Rational::from_integer(choose(ne - 1, params.group() - 1).into());
    lead * Rational::from_integer((ne_i - g).into())
        * (Rational::from_integer((params.users() as i64).into()) - ratio(ne_i, g + 1))
}

struct Server<'a> {
    placement: &'a PlacementResult,
    params: &'a SystemParams,
}

impl<'a> Server<'a> {
    fn new(placement: &'a PlacementResult) -> Self {
        Server { placement, params: placement.params() }
    }

    fn message(&self, phase: Phase, terms: &[SubfileId], provenance: Provenance) -> BroadcastMessage {
        let mut payload = vec![0u8; self.params.subfile_bytes()];
        let mut footprint = Footprint::zero(self.params.subfile_count());
        for id in terms {
            xor_into(&mut payload, self.placement.library().subfile(self.params, id));
            footprint.flip(subfile_index(self.params, id).expect("scheme emits valid subfiles"));
        }
        BroadcastMessage { phase, payload, footprint, provenance }
    }

    fn uncoded(&self, phase: Phase, id: SubfileId) -> BroadcastMessage {
        self.message(phase, &[id], Provenance::Uncoded { subfile: id })
    }
}

/// Requested subfiles of every Type I symbol, one per message.
pub fn emit_type1(
    placement: &PlacementResult,
    classification: &Classification,
    demand: &Demand,
) -> Vec<BroadcastMessage> {
    let server = Server::new(placement);
    let requested = demand.requested();
    classification
        .iter()
        .filter(|(_, _, c)| *c == SymbolClass::TypeI)
        .flat_map(|(user, subset, _)| {
            subset
                .members()
                .filter(|&f| requested.contains(f))
                .map(move |f| SubfileId::new(f, user, subset))
                .collect::<Vec<_>>()
        })
        .map(|id| server.uncoded(Phase::TypeI, id))
        .collect()
}

/// The `g-1` companions of the owner's requested subfile in each Type II symbol.
pub fn emit_type2_phase1(
    placement: &PlacementResult,
    classification: &Classification,
    demand: &Demand,
) -> Vec<BroadcastMessage> {
    let server = Server::new(placement);
    classification
        .iter()
        .filter(|(_, _, c)| *c == SymbolClass::TypeII)
        .flat_map(|(user, subset, _)| {
            let own = demand.of(user);
            subset
                .members()
                .filter(move |&f| f != own)
                .map(move |f| SubfileId::new(f, user, subset))
                .collect::<Vec<_>>()
        })
        .map(|id| server.uncoded(Phase::TypeIIPhase1, id))
        .collect()
}

/// `W_{f,A}^{(i)} xor W_{f,A}^{(u)}` for every non-leader `i`, leader `u` of
/// its group, and every `g`-subset `A` of requested files containing `f = d(i)`.
pub fn emit_type2_phase2(placement: &PlacementResult, demand: &Demand, leaders: &LeaderSet) -> Vec<BroadcastMessage> {
    let server = Server::new(placement);
    let params = placement.params();
    let requested = demand.requested();
    let subsets = cache_subsets(params);
    let mut out = Vec::new();
    for user in 1..=params.users() {
        if leaders.is_leader(user) {
            continue;
        }
        let file = demand.of(user);
        let leader = leaders.leader_of(file).expect("validated leader set");
        for &subset in subsets.iter().filter(|a| a.contains(file) && a.is_subset_of(&requested)) {
            let terms = [SubfileId::new(file, user, subset), SubfileId::new(file, leader, subset)];
            out.push(server.message(
                Phase::TypeIIPhase2,
                &terms,
                Provenance::LeaderExchange { file, subset, member: user, leader },
            ));
        }
    }
    out
}

/// Groups of `g+1` leaders, lexicographic over leader user indices.
pub fn leader_groups(params: &SystemParams, leaders: &LeaderSet) -> Vec<Vec<usize>> {
    let users = leaders.users();
    enumerate_subsets(users.len(), params.group() + 1)
        .into_iter()
        .map(|pick| pick.members().map(|p| users[p - 1]).collect())
        .collect()
}

/// Files requested by a group of leaders.
pub fn group_files(group: &[usize], demand: &Demand) -> FileSubset {
    group.iter().fold(FileSubset::default(), |acc, &u| acc.with(demand.of(u)))
}

/// Type III messages: all phase 1 pairings (every group), then every
/// group's phase 2 sum. Empty when `Ne <= g`.
pub fn emit_type3(placement: &PlacementResult, demand: &Demand, leaders: &LeaderSet) -> Result<Vec<BroadcastMessage>> {
    let server = Server::new(placement);
    let params = placement.params();
    let g = params.group();
    let mut phase1 = Vec::new();
    let mut phase2 = Vec::new();

    for group in leader_groups(params, leaders) {
        let files = group_files(&group, demand);
        let rv = assign_rv(&group, demand)?;
        // subfile of file `f` in the Type III symbol of user `u`
        let piece = |f: usize, u: usize| SubfileId::new(f, u, files.without(demand.of(u)));
        let selected = |j: usize| piece(rv.file_of(j).expect("member of group"), j);

        let before = phase1.len();
        for &i in &group {
            let own = demand.of(i);
            let own_pick = rv.file_of(i).expect("member of group");
            for &j in group.iter().filter(|&&j| j != i) {
                let target = rv.file_of(j).expect("member of group");
                if target == own || target == own_pick {
                    continue;
                }
                phase1.push(server.message(
                    Phase::TypeIIIPhase1,
                    &[piece(target, i), selected(j)],
                    Provenance::GroupPair { group: group.clone(), owner: i, partner: j, file: target },
                ));
            }
        }
        let leader_messages = phase1.len() - before;
        if leader_messages != (g - 1) * (g + 1) {
            return Err(Error::SchemeInvariant(format!(
                "group {group:?} produced {leader_messages} leader pairings, expected {}",
                (g - 1) * (g + 1)
            )));
        }

        for i in (1..=params.users()).filter(|&u| !leaders.is_leader(u) && files.contains(demand.of(u))) {
            let own = demand.of(i);
            for &j in &group {
                let target = rv.file_of(j).expect("member of group");
                if target == own {
                    continue;
                }
                phase1.push(server.message(
                    Phase::TypeIIIPhase1,
                    &[piece(target, i), selected(j)],
                    Provenance::GroupPair { group: group.clone(), owner: i, partner: j, file: target },
                ));
            }
        }

        let picks: Vec<SubfileId> = group.iter().map(|&j| selected(j)).collect();
        phase2.push(server.message(
            Phase::TypeIIIPhase2,
            &picks,
            Provenance::GroupSum { group: group.clone(), selected: picks.clone() },
        ));
    }

    phase1.extend(phase2);
    Ok(phase1)
}

/// Full broadcast for `demand`: Type I, II-P1, II-P2, III-P1, III-P2.
pub fn deliver(placement: &PlacementResult, demand: &Demand, leaders: &LeaderSet) -> Result<TransmissionLog> {
    if demand.as_slice().len() != placement.params().users() {
        return Err(Error::InvalidDemand("demand length does not match the placement".into()));
    }
    leaders.validate(demand)?;
    let classification = classify_symbols(placement, demand);
    let mut log = TransmissionLog::new();
    log.extend(emit_type1(placement, &classification, demand));
    log.extend(emit_type2_phase1(placement, &classification, demand));
    log.extend(emit_type2_phase2(placement, demand, leaders));
    log.extend(emit_type3(placement, demand, leaders)?);
    Ok(log)
}
