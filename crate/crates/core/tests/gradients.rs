mod common;

use common::{fd_clustering, fd_mse, fd_nn, fd_total, FdReport};
use unseen::backends::BackendKind;

fn check(name: &str, r: FdReport) {
    assert!(r.passed(), "{name}: max relative error {:.3e} over {} probes", r.max_rel, r.probes);
}

#[test]
fn mse_matches_finite_differences() {
    check("mse", fd_mse(1));
}

#[test]
fn dcn_loss_matches_finite_differences() {
    check("dcn", fd_clustering(BackendKind::Dcn, 2));
}

#[test]
fn dec_loss_matches_finite_differences() {
    check("dec", fd_clustering(BackendKind::Dec, 3));
}

#[test]
fn dkm_loss_matches_finite_differences() {
    check("dkm", fd_clustering(BackendKind::Dkm, 4));
}

#[test]
fn nn_loss_matches_finite_differences() {
    check("nn", fd_nn(false, 5));
}

#[test]
fn nn_loss_simul_matches_finite_differences() {
    check("nn_simul", fd_nn(true, 6));
}

#[test]
fn composite_objective_matches_finite_differences() {
    check("total", fd_total(7));
}
