use std::ffi::CStr;
use std::ptr;

use mersp_ffi::*;

const EXAMPLE: [f64; 9] = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0];

fn pd_matrix() -> Vec<f64> {
    // 4 observables, 1 target
    let g = [
        [1.0, 0.2, 0.0, 0.1, 0.3],
        [0.0, 1.0, 0.4, 0.0, 0.2],
        [0.3, 0.0, 1.0, 0.2, 0.0],
        [0.1, 0.2, 0.0, 1.0, 0.5],
        [0.0, 0.3, 0.1, 0.0, 1.0],
    ];
    let mut c = vec![0.0; 25];
    for i in 0..5 {
        for j in 0..5 {
            c[i * 5 + j] = (0..5).map(|k| g[k][i] * g[k][j]).sum();
        }
    }
    c
}

fn last_error() -> String {
    let p = mersp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn three_by_three_objective() {
    unsafe {
        let mut cov = ptr::null_mut();
        assert_eq!(mersp_covariance_new(EXAMPLE.as_ptr(), 2, 1, &mut cov), MerspStatus::Ok);
        let mut cond = true;
        assert_eq!(mersp_covariance_condition7(cov, &mut cond), MerspStatus::Ok);
        assert!(!cond);

        let mut inst = ptr::null_mut();
        assert_eq!(mersp_instance_new(cov, 1, MerspOrientation::Original, &mut inst), MerspStatus::Ok);
        assert_eq!((mersp_instance_n(inst), mersp_instance_s(inst)), (2, 1));
        let mut v = 0.0;
        assert_eq!(mersp_instance_objective(inst, [0usize].as_ptr(), 1, &mut v), MerspStatus::Ok);
        assert!((v - 2f64.ln()).abs() < 1e-12);

        let mut comp = ptr::null_mut();
        assert_eq!(mersp_instance_new(cov, 1, MerspOrientation::Complementary, &mut comp), MerspStatus::NotPositiveDefinite);
        assert!(comp.is_null());
        assert!(!last_error().is_empty());

        mersp_instance_free(inst);
        mersp_covariance_free(cov);
    }
}

#[test]
fn bounds_sandwich_the_optimum() {
    let c = pd_matrix();
    unsafe {
        let mut cov = ptr::null_mut();
        assert_eq!(mersp_covariance_new(c.as_ptr(), 4, 1, &mut cov), MerspStatus::Ok);
        let mut psi = 0.0;
        assert_eq!(mersp_covariance_psi_star(cov, MerspPsiMode::Complementary, &mut psi), MerspStatus::Ok);
        assert!((psi - 1.0).abs() < 1e-9);

        let mut inst = ptr::null_mut();
        assert_eq!(mersp_instance_new(cov, 2, MerspOrientation::Auto, &mut inst), MerspStatus::Ok);
        let (mut lower, mut exact) = (0.0, 0.0);
        let mut subset = [usize::MAX; 2];
        assert_eq!(mersp_lower_bound(inst, subset.as_mut_ptr(), &mut lower), MerspStatus::Ok);
        assert!(subset.iter().all(|&i| i < 4));
        assert_eq!(mersp_exact(inst, ptr::null_mut(), &mut exact), MerspStatus::Ok);
        assert!(lower <= exact + 1e-12);

        let opts = mersp_nlp_options_default();
        let mut x = [0.0; 4];
        for strategy in [MerspStrategy::Identity, MerspStrategy::Diagonal, MerspStrategy::Trace] {
            let mut ub = 0.0;
            assert_eq!(mersp_nlp_bound(inst, strategy, true, opts, &mut ub, x.as_mut_ptr()), MerspStatus::Ok);
            assert!(ub >= exact - 1e-6);
            assert!((x.iter().sum::<f64>() - 2.0).abs() < 1e-6);
        }
        let mut scaled = 0.0;
        let mut psi_vec = [0.0; 4];
        assert_eq!(
            mersp_scaled_bound(inst, MerspStrategy::Identity, true, opts, &mut scaled, psi_vec.as_mut_ptr()),
            MerspStatus::Ok
        );
        assert!(scaled >= exact - 1e-6 && psi_vec.iter().all(|&p| p > 0.0));

        let mut orig = ptr::null_mut();
        assert_eq!(mersp_instance_new(cov, 2, MerspOrientation::Original, &mut orig), MerspStatus::Ok);
        let mut spec = 0.0;
        assert_eq!(mersp_spectral_bound(orig, &mut spec), MerspStatus::Ok);
        assert!(spec >= exact - 1e-6);

        let mut back = ptr::null_mut();
        assert_eq!(mersp_instance_complement(inst, &mut back), MerspStatus::Ok);
        let mut v = 0.0;
        assert_eq!(mersp_instance_objective(back, [0usize, 1].as_ptr(), 2, &mut v), MerspStatus::Ok);
        let mut w = 0.0;
        assert_eq!(mersp_instance_objective(orig, [0usize, 1].as_ptr(), 2, &mut w), MerspStatus::Ok);
        assert!((v - w).abs() < 1e-9);

        for h in [inst, orig, back] {
            mersp_instance_free(h);
        }
        mersp_covariance_free(cov);
    }
}

#[test]
fn argument_errors() {
    unsafe {
        let mut cov = ptr::null_mut();
        assert_eq!(mersp_covariance_new(ptr::null(), 2, 1, &mut cov), MerspStatus::NullPointer);
        assert_eq!(last_error(), "data is null");
        let asym = [1.0, 0.5, 0.0, 1.0];
        assert_eq!(mersp_covariance_new(asym.as_ptr(), 1, 1, &mut cov), MerspStatus::InvalidArgument);
        assert_eq!(mersp_covariance_new(EXAMPLE.as_ptr(), 2, 1, ptr::null_mut()), MerspStatus::NullPointer);

        assert_eq!(mersp_covariance_new(EXAMPLE.as_ptr(), 2, 1, &mut cov), MerspStatus::Ok);
        let mut inst = ptr::null_mut();
        assert_eq!(mersp_instance_new(cov, 2, MerspOrientation::Original, &mut inst), MerspStatus::InvalidArgument);
        assert_eq!(mersp_instance_new(cov, 1, MerspOrientation::Original, &mut inst), MerspStatus::Ok);
        let mut v = 0.0;
        assert_eq!(mersp_instance_objective(inst, [5usize].as_ptr(), 1, &mut v), MerspStatus::InvalidArgument);
        let bad = MerspNlpOptions { gamma_grid: 0, ..mersp_nlp_options_default() };
        assert_eq!(
            mersp_nlp_bound(inst, MerspStrategy::Identity, true, bad, &mut v, ptr::null_mut()),
            MerspStatus::InvalidArgument
        );
        mersp_instance_free(inst);
        mersp_covariance_free(cov);
        mersp_covariance_free(ptr::null_mut());
        assert_eq!(mersp_instance_n(ptr::null()), 0);
    }
}

#[test]
fn read_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    std::fs::write(&path, "2 1\n1 0 1\n0 1 1\n1 1 2\n").unwrap();
    let cpath = std::ffi::CString::new(path.to_str().unwrap()).unwrap();
    let missing = std::ffi::CString::new(dir.path().join("nope").to_str().unwrap()).unwrap();
    unsafe {
        let mut cov = ptr::null_mut();
        assert_eq!(mersp_covariance_read(cpath.as_ptr(), &mut cov), MerspStatus::Ok);
        mersp_covariance_free(cov);
        assert_eq!(mersp_covariance_read(missing.as_ptr(), &mut cov), MerspStatus::Io);
    }
}
