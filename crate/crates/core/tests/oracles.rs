mod common;

use common::oracles;

#[test]
fn forward_matches_path_sum() {
    oracles::forward_matches_path_sum();
}

#[test]
fn forward_three_steps_within_1e12() {
    oracles::forward_three_steps_within_1e12();
}

#[test]
fn viterbi_matches_best_enumerated_path() {
    oracles::viterbi_matches_best_enumerated_path();
}

#[test]
fn viterbi_tie_break_prefers_state_zero() {
    oracles::viterbi_tie_break_prefers_state_zero();
}

#[test]
fn nbc_matches_enumerated_bayes_rule() {
    oracles::nbc_matches_enumerated_bayes_rule();
}

#[test]
fn nbc_exact_tie_goes_to_zero() {
    oracles::nbc_exact_tie_goes_to_zero();
}

#[test]
fn stepwise_choice_matches_exhaustive_scan() {
    oracles::stepwise_choice_matches_exhaustive_scan();
}

#[test]
fn free_blocks_match_window_enumeration() {
    oracles::free_blocks_match_window_enumeration();
}

#[test]
fn entropy_matches_direct_formula() {
    oracles::entropy_matches_direct_formula();
}

#[test]
fn svm_matches_grid_max_margin() {
    oracles::svm_matches_grid_max_margin();
}
