//! Reverse-mode gradients checked against central differences, then a
//! small logistic model fitted with Adam.
//!
//! cargo run --example autodiff

use geofuse::tensor::{Adam, Tape, Tensor};

fn loss(tape: &mut Tape, w: Tensor, b: Tensor, x: &Tensor, y: &Tensor) -> (f64, Vec<Tensor>) {
    let wv = tape.param(w);
    let bv = tape.param(b);
    let xv = tape.constant(x.clone());
    let yv = tape.constant(y.clone());
    let z = tape.matmul(xv, wv).unwrap();
    let z = tape.add(z, bv).unwrap();
    let p = tape.sigmoid(z).unwrap();
    let e = tape.sub(p, yv).unwrap();
    let sq = tape.mul(e, e).unwrap();
    let l = tape.sum(sq).unwrap();
    tape.backward(l).unwrap();
    let grads = vec![tape.grad(wv).unwrap().clone(), tape.grad(bv).unwrap().clone()];
    (tape.value(l).item(), grads)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = Tensor::new(vec![6, 2], vec![0.0, 0.1, 0.3, 0.2, 0.5, 0.9, 0.9, 0.7, 0.2, 0.8, 1.0, 1.0])?;
    let y = Tensor::new(vec![6, 1], vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0])?;
    let mut w = Tensor::new(vec![2, 1], vec![0.3, -0.2])?;
    let mut b = Tensor::new(vec![1], vec![0.1])?;

    let (_, grads) = loss(&mut Tape::new(), w.clone(), b.clone(), &x, &y);
    let h = 1e-6;
    for i in 0..2 {
        let (mut wp, mut wm) = (w.clone(), w.clone());
        wp.data_mut()[i] += h;
        wm.data_mut()[i] -= h;
        let numeric = (loss(&mut Tape::new(), wp, b.clone(), &x, &y).0 - loss(&mut Tape::new(), wm, b.clone(), &x, &y).0) / (2.0 * h);
        println!("dL/dw{i}: tape {:+.10}  central difference {:+.10}", grads[0].data()[i], numeric);
    }

    let mut adam = Adam::new(0.05);
    for step in 0..=300 {
        let (l, g) = loss(&mut Tape::new(), w.clone(), b.clone(), &x, &y);
        if step % 50 == 0 {
            println!("step {step:>3}  loss {l:.6}");
        }
        let mut params = [w, b];
        adam.step(&mut params, &g)?;
        [w, b] = params;
    }
    println!("w = {:?}, b = {:?}", w.data(), b.data());
    Ok(())
}
