#![allow(dead_code)]

use sqgauss::{KernelSpec, MeanSpec, Perturbation, ProcessModel};

/// Models exercised by the cross-module checks.
pub fn fixtures() -> Vec<(&'static str, ProcessModel)> {
    vec![
        (
            "white-centered",
            ProcessModel::stationary(KernelSpec::white(), MeanSpec::zero()).unwrap(),
        ),
        (
            "white-mean",
            ProcessModel::stationary(KernelSpec::white(), MeanSpec::Constant(0.8)).unwrap(),
        ),
        (
            "ar1-half",
            ProcessModel::stationary(KernelSpec::ar1(0.5).unwrap(), MeanSpec::Constant(1.0)).unwrap(),
        ),
        (
            "ar1-negative-alternating",
            ProcessModel::stationary(KernelSpec::ar1(-0.7).unwrap(), MeanSpec::Alternating(0.6)).unwrap(),
        ),
        (
            "ma2",
            ProcessModel::stationary(KernelSpec::ma(vec![1.0, 0.5, -0.3]).unwrap(), MeanSpec::Constant(0.4))
                .unwrap(),
        ),
        (
            "table",
            ProcessModel::stationary(KernelSpec::table(vec![1.0, 0.4, 0.1]).unwrap(), MeanSpec::zero()).unwrap(),
        ),
        (
            "ar1-perturbed-decaying",
            ProcessModel::new(
                MeanSpec::Decaying {
                    m_inf: 1.0,
                    c: -0.5,
                    rho: 0.6,
                },
                KernelSpec::ar1(0.3).unwrap(),
                Perturbation::Separable { c: 0.8, rho: 0.5 },
            )
            .unwrap(),
        ),
    ]
}

pub fn ar1_half(m_inf: f64) -> ProcessModel {
    ProcessModel::stationary(KernelSpec::ar1(0.5).unwrap(), MeanSpec::Constant(m_inf)).unwrap()
}
