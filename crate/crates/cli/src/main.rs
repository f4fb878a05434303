fn main() {
    println!("drn");
}
