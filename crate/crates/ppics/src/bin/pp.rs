fn main() {
    std::process::exit(ppics::cli::main());
}
