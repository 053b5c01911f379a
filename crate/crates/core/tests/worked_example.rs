//! The 3-file, 6-user example with `g = 2` and demand (1,1,2,2,3,3), traced
//! through each user's decode.

use coded_caching::decoder::{constructive_decode, span_oracle, StepTarget, UserView};
use coded_caching::delivery::{deliver, select_leaders};
use coded_caching::model::{Demand, Library, Phase, SubfileId, SystemParams, TransmissionLog};
use coded_caching::placement::{build_placement, PlacementResult};
use coded_caching::FileSubset;

fn w(file: usize, subset: &[usize], user: usize) -> SubfileId {
    SubfileId::new(file, user, FileSubset::from_members(subset).unwrap())
}

fn setup() -> (PlacementResult, Demand, TransmissionLog) {
    let params = SystemParams::new(3, 6, 2, 16).unwrap();
    let placement = build_placement(&params, Library::generate(&params, 42)).unwrap();
    let demand = Demand::new(&params, vec![1, 1, 2, 2, 3, 3]).unwrap();
    let log = deliver(&placement, &demand, &select_leaders(&demand)).unwrap();
    (placement, demand, log)
}

fn sorted(mut v: Vec<SubfileId>) -> Vec<SubfileId> {
    v.sort();
    v
}

#[test]
fn leader_one_recovers_its_twelve_subfiles_phase_by_phase() {
    let (pl, d, log) = setup();
    let out = constructive_decode(&UserView::new(&pl, &log, &d, 1)).unwrap();
    let of_file_1 = |phase| sorted(out.recovered_in(phase).into_iter().filter(|id| id.file == 1).collect());

    assert!(of_file_1(Phase::TypeI).is_empty());
    assert_eq!(
        of_file_1(Phase::TypeIIPhase1),
        sorted(vec![
            w(1, &[1, 2], 3),
            w(1, &[1, 2], 4),
            w(1, &[1, 3], 5),
            w(1, &[1, 3], 6),
            w(1, &[1, 2], 1),
            w(1, &[1, 3], 1),
        ])
    );
    assert_eq!(of_file_1(Phase::TypeIIPhase2), sorted(vec![w(1, &[1, 2], 2), w(1, &[1, 3], 2)]));
    assert_eq!(
        of_file_1(Phase::TypeIIIPhase2),
        sorted(vec![w(1, &[1, 2], 5), w(1, &[1, 3], 3), w(1, &[1, 3], 4), w(1, &[1, 2], 6)])
    );
    assert_eq!(out.payload, pl.library().file(1));
}

#[test]
fn type3_combination_step_per_user() {
    let (pl, d, log) = setup();
    for user in 1..=6 {
        let out = constructive_decode(&UserView::new(&pl, &log, &d, user)).unwrap();
        let combos: Vec<_> = out.steps.iter().filter(|s| matches!(s.target, StepTarget::GroupCombination(_))).collect();
        assert_eq!(combos.len(), 1);
        // own symbol plus own pairings: one for a leader, two otherwise
        let expected = if [1, 3, 5].contains(&user) { 2 } else { 3 };
        assert_eq!(combos[0].operands, expected, "user {user}");
    }
}

#[test]
fn non_leader_learns_leader_pieces_in_phase_two() {
    let (pl, d, log) = setup();
    let out = constructive_decode(&UserView::new(&pl, &log, &d, 2)).unwrap();
    let own: Vec<_> = out.recovered_in(Phase::TypeIIPhase1).into_iter().filter(|id| id.file == 1).collect();
    assert_eq!(
        sorted(own),
        sorted(vec![
            w(1, &[1, 2], 2),
            w(1, &[1, 3], 2),
            w(1, &[1, 2], 3),
            w(1, &[1, 2], 4),
            w(1, &[1, 3], 5),
            w(1, &[1, 3], 6)
        ])
    );
    assert_eq!(out.recovered_in(Phase::TypeIIPhase2), vec![w(1, &[1, 2], 1), w(1, &[1, 3], 1)]);
    assert_eq!(out.payload, pl.library().file(1));
}

#[test]
fn no_message_is_redundant_for_the_last_one() {
    let (pl, d, mut log) = setup();
    log.pop();
    let failing = (1..=6).filter(|&u| !span_oracle(&UserView::new(&pl, &log, &d, u)).decodable).count();
    assert!(failing >= 1);
}

#[test]
fn every_single_message_is_needed_by_someone() {
    let (pl, d, log) = setup();
    for skip in 0..log.len() {
        let mut reduced = TransmissionLog::new();
        for (idx, m) in log.messages().iter().enumerate() {
            if idx != skip {
                reduced.push(m.clone());
            }
        }
        let failing = (1..=6).filter(|&u| !span_oracle(&UserView::new(&pl, &reduced, &d, u)).decodable).count();
        assert!(failing >= 1, "message {skip} is redundant");
    }
}
