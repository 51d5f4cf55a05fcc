fn main() {
    println!("qperm: work in progress");
}
