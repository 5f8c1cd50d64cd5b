fn main() {
    println!("fracpot");
}
