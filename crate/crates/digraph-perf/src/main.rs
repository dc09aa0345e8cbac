fn main() {
    std::process::exit(digraph_perf::cli::main_entry());
}
