fn main() {
    std::process::exit(seeg_rank_cli::main_with(std::env::args_os()));
}
