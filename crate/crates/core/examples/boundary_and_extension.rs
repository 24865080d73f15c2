//! Splits the boundary of a rectangle into inflow, outflow and tangential
//! parts and lifts the boundary velocity into the interior.
//!
//! `cargo run --release --example boundary_and_extension`

use inflow_ns::field::{ScalarSpec, VectorSpec};
use inflow_ns::grid::{build_domain, build_extension, classify_boundary, DomainSpec, FaceClass};

fn main() -> inflow_ns::Result<()> {
    let domain = build_domain(&DomainSpec { lower: vec![0.0, 0.0], upper: vec![2.0, 1.0], cells: vec![40, 20] })?;
    // Expanding stream: enters through the left and bottom sides, leaves through the others.
    let velocity = VectorSpec::Linear { base: vec![0.4, 0.1], gradient: vec![vec![0.2, 0.0], vec![0.0, 0.2]] };
    let density = ScalarSpec::Constant { value: 1.2 };
    let partition = classify_boundary(&domain, &velocity, Some(&density))?;

    for class in [FaceClass::In, FaceClass::Out, FaceClass::Zero] {
        println!("{class:?}: {} faces, measure {:.4}", partition.faces_of(class).count(), partition.measure_of(class));
    }
    let net: f64 = partition.faces.iter().zip(&partition.u_b_normal).map(|(f, un)| f.measure * un).sum();
    println!("net boundary flux {net:.3e}");

    let ext = build_extension(&partition, 0.1)?;
    let collar_min = ext
        .div_u_inf
        .iter()
        .enumerate()
        .filter(|(c, _)| domain.distance_to_boundary(domain.center(*c)) < ext.collar_width)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let trace = partition
        .faces
        .iter()
        .enumerate()
        .map(|(f, face)| {
            let u = ext.u_inf[face.cell];
            ((u[0] - partition.u_b[f][0]).powi(2) + (u[1] - partition.u_b[f][1]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max);
    println!("collar width {}, min div u_inf in the collar {collar_min:.3e}", ext.collar_width);
    println!("largest |u_inf - u_B| at boundary cells {trace:.3e} (spacing {})", domain.max_spacing());
    Ok(())
}
