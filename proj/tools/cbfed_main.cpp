#include "cbfed/run.hpp"

int main(int argc, char** argv) {
    return cbfed::run_command(argc, argv);
}
