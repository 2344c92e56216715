use torushh::tate::*;

fn main() {
    let p = TateParams::new(false, 3, 5, 8);
    let o0 = build_resolution(&p, 0, 0).unwrap();
    let o1 = build_resolution(&p, 1, 0).unwrap();
    let om1 = build_resolution(&p, 0, -1).unwrap();
    let o2 = build_resolution(&p, 2, 0).unwrap();
    println!("end(O_C0)       = {:?}", rhom_dims(&o0, &o0, 6, 8).unwrap());
    println!("hom(O_C1, O_C0) = {:?}", rhom_dims(&o1, &o0, 6, 8).unwrap());
    println!("hom(O_C0, O_C1) = {:?}", rhom_dims(&o0, &o1, 6, 8).unwrap());
    println!("hom(O(-1), O)   = {:?}", rhom_dims(&om1, &o0, 6, 8).unwrap());
    println!("hom(O, O(-1))   = {:?}", rhom_dims(&o0, &om1, 6, 8).unwrap());
    println!("end(O(-1))      = {:?}", rhom_dims(&om1, &om1, 6, 8).unwrap());
    println!("hom(O_C2, O_C0) = {:?}", rhom_dims(&o2, &o0, 6, 8).unwrap());
    // stability: deeper truncation, same window
    let p7 = TateParams::new(false, 3, 7, 8);
    let a = build_resolution(&p7, 0, 0).unwrap();
    println!("end(O_C0) D=7   = {:?}", &rhom_dims(&a, &a, 6, 8).unwrap()[..7]);
}
