//! Benchmark fixtures for the solver kernels.

use microevo::grain_growth::{voronoi_init, GrainParams, OrderParameterSet};
use microevo::spinodal::{init_concentration, ConcentrationField, SpinodalParams};

pub fn grain_fixture(size: usize, n_grains: usize) -> (OrderParameterSet, GrainParams) {
    let params = GrainParams {
        height: size,
        width: size,
        n_grains,
        ..GrainParams::default()
    };
    let set = voronoi_init(&params).expect("valid benchmark parameters");
    (set, params)
}

pub fn spinodal_fixture(size: usize) -> (ConcentrationField, SpinodalParams) {
    let params = SpinodalParams {
        height: size,
        width: size,
        ..SpinodalParams::default()
    };
    (init_concentration(&params), params)
}
