mod common;

use common::criteria;

fn pass(v: criteria::Verdict) {
    if let Err(e) = v {
        panic!("{e}");
    }
}

#[test]
fn add1_and_add2_follow_the_store_oracle() {
    pass(criteria::command_semantics());
}

#[test]
fn empty_widget_body_is_its_parent() {
    pass(criteria::empty_body_equivalence());
}

#[test]
fn splitting_a_widget_body_keeps_traces() {
    pass(criteria::split_body_equivalence());
}

#[test]
fn do_block_effects_are_the_union_of_its_bindings() {
    criteria::do_union_law().unwrap();
}

#[test]
fn handled_events_are_erased_from_widget_effects() {
    criteria::erasure_law().unwrap();
}

#[test]
fn accepted_programs_always_find_a_handler() {
    let accepted = criteria::handler_always_found().unwrap();
    assert!(accepted >= 50, "only {accepted} programs accepted");
}

#[test]
fn database_round_trips_random_pairs() {
    let dir = tempfile::tempdir().unwrap();
    pass(criteria::db_round_trip(dir.path()));
}
