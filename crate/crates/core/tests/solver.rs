use hyperatl_core::solver::{
    brute_force_solve, verify_strategy, zielonka, ParityGame, Solution, BRUTE_FORCE_BOUND, NO_MOVE,
};
use proptest::prelude::*;

/// Games with up to 8 vertices, out-degree 1..=3 and priorities 0..=4.
fn arb_game() -> impl Strategy<Value = ParityGame> {
    (1..=8usize).prop_flat_map(|n| {
        let vertex = (
            0..2u8,
            0..=4u32,
            prop::collection::vec(0..n as u32, 1..=3),
        );
        prop::collection::vec(vertex, n).prop_map(|vs| {
            let owner = vs.iter().map(|v| v.0).collect();
            let priority = vs.iter().map(|v| v.1).collect();
            let succ: Vec<Vec<u32>> = vs.into_iter().map(|v| v.2).collect();
            ParityGame::from_lists(owner, priority, &succ, 0)
        })
    })
}

fn shifted(g: &ParityGame, by: u32, swap_owners: bool) -> ParityGame {
    let mut h = g.clone();
    for p in &mut h.priority {
        *p += by;
    }
    if swap_owners {
        for o in &mut h.owner {
            *o = 1 - *o;
        }
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn zielonka_matches_brute_force(g in arb_game()) {
        let sol = zielonka(&g);
        let reference = brute_force_solve(&g, BRUTE_FORCE_BOUND).unwrap();
        prop_assert_eq!(&sol.winner, &reference);
        prop_assert!(verify_strategy(&g, &sol));
    }

    #[test]
    fn regions_partition_vertices(g in arb_game()) {
        let sol = zielonka(&g);
        let mut all = sol.region(0);
        all.extend(sol.region(1));
        all.sort_unstable();
        prop_assert_eq!(all, (0..g.num_vertices() as u32).collect::<Vec<_>>());
    }

    #[test]
    fn even_shift_keeps_winners(g in arb_game()) {
        prop_assert_eq!(zielonka(&shifted(&g, 2, false)).winner, zielonka(&g).winner);
    }

    #[test]
    fn dual_game_swaps_winners(g in arb_game()) {
        let w = zielonka(&g).winner;
        let dual = zielonka(&shifted(&g, 1, true)).winner;
        prop_assert_eq!(dual, w.iter().map(|x| 1 - x).collect::<Vec<_>>());
    }

    #[test]
    fn dropping_a_strategy_move_is_caught(g in arb_game()) {
        let sol = zielonka(&g);
        let owned_win = (0..g.num_vertices()).find(|&v| g.owner[v] == sol.winner[v]);
        if let Some(v) = owned_win {
            let mut bad = sol.clone();
            bad.strategy[v] = NO_MOVE;
            prop_assert!(!verify_strategy(&g, &bad));
        }
    }

    /// Whatever claim the checker accepts must be the true partition.
    #[test]
    fn checker_is_sound(
        g in arb_game(),
        winner in prop::collection::vec(0..2u8, 8),
        picks in prop::collection::vec(0..3usize, 8),
    ) {
        let n = g.num_vertices();
        let winner = winner[..n].to_vec();
        let strategy = (0..n)
            .map(|v| {
                if g.owner[v] == winner[v] {
                    let s = g.successors(v as u32);
                    s[picks[v] % s.len()]
                } else {
                    NO_MOVE
                }
            })
            .collect();
        let claim = Solution { winner, strategy };
        if verify_strategy(&g, &claim) {
            prop_assert_eq!(claim.winner, brute_force_solve(&g, BRUTE_FORCE_BOUND).unwrap());
        }
    }
}

#[test]
fn player_zero_without_vertices_wins_by_priority_alone() {
    // Every vertex belongs to player 1, who picks the cycle; player 0 wins
    // only where every reachable cycle has an even minimum.
    let succ = vec![vec![1, 2], vec![0], vec![2]];
    let g = ParityGame::from_lists(vec![1, 1, 1], vec![2, 2, 1], &succ, 0);
    assert_eq!(zielonka(&g).winner, vec![1, 1, 1]);
    let g = ParityGame::from_lists(vec![1, 1, 1], vec![2, 2, 0], &succ, 0);
    assert_eq!(zielonka(&g).winner, vec![0, 0, 0]);
}

#[test]
fn oversized_games_are_refused_by_brute_force() {
    let n = 30;
    let succ: Vec<Vec<u32>> = (0..n).map(|v| vec![(v + 1) % n, v]).collect();
    let g = ParityGame::from_lists(vec![0; n as usize], vec![0; n as usize], &succ, 0);
    assert!(brute_force_solve(&g, BRUTE_FORCE_BOUND).is_err());
    assert!(verify_strategy(&g, &zielonka(&g)));
}
