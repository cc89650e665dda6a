fn main() {
    std::process::exit(spde_core::cli::main_entry());
}
