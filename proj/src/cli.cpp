namespace multsub {}
