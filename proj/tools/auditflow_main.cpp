#include "auditflow/app/cli.hpp"

int main(int argc, char** argv) { return auditflow::app::dispatch(argc, argv); }
